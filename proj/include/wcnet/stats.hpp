/*
 * Copyright 2026 wcnet authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "wcnet/common.hpp"
#include "wcnet/matrix.hpp"
#include "wcnet/panel.hpp"

namespace wcnet {

/// Per-asset descriptive statistics. Kurtosis is the raw Pearson moment ratio
/// (normal = 3); the Jarque-Bera statistic uses excess kurtosis internally.
/// Skewness, kurtosis and JB are NaN for a zero-variance series.
struct AssetStats {
    std::string asset;
    double mean = 0.0;
    double stddev = 0.0;  // sample, n-1 denominator
    double skewness = 0.0;
    double kurtosis = 0.0;
    double jarque_bera = 0.0;
};

struct StatsTable {
    std::vector<AssetStats> rows;
};

inline StatsTable descriptive_stats(const ReturnPanel& panel) {
    const std::size_t n = panel.n_obs();
    if (n < 8) throw DataError("descriptive_stats needs at least 8 observations per asset");
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    StatsTable table;
    table.rows.reserve(panel.n_assets());
    for (std::size_t a = 0; a < panel.n_assets(); ++a) {
        AssetStats st;
        st.asset = panel.assets[a];
        double sum = 0.0;
        for (std::size_t t = 0; t < n; ++t) sum += panel.values(t, a);
        st.mean = sum / static_cast<double>(n);

        double m2 = 0.0, m3 = 0.0, m4 = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double d = panel.values(t, a) - st.mean;
            const double d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= static_cast<double>(n);
        m3 /= static_cast<double>(n);
        m4 /= static_cast<double>(n);

        st.stddev = std::sqrt(m2 * static_cast<double>(n) / static_cast<double>(n - 1));
        if (m2 <= 0.0) {
            st.skewness = nan;
            st.kurtosis = nan;
            st.jarque_bera = nan;
        } else {
            st.skewness = m3 / std::pow(m2, 1.5);
            st.kurtosis = m4 / (m2 * m2);
            const double excess = st.kurtosis - 3.0;
            st.jarque_bera = static_cast<double>(n) / 6.0 *
                             (st.skewness * st.skewness + excess * excess / 4.0);
        }
        table.rows.push_back(st);
    }
    return table;
}

/// Pearson correlations between all asset pairs. Unit diagonal; entries
/// touching a zero-variance asset are NaN (reported as missing).
inline RealMatrix pearson_matrix(const ReturnPanel& panel) {
    const std::size_t n = panel.n_obs();
    const std::size_t m = panel.n_assets();
    if (n < 2) throw DataError("pearson_matrix needs at least 2 observations");
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    std::vector<double> mean(m, 0.0), var(m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
        double sum = 0.0;
        for (std::size_t t = 0; t < n; ++t) sum += panel.values(t, a);
        mean[a] = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double d = panel.values(t, a) - mean[a];
            ss += d * d;
        }
        var[a] = ss;
    }

    RealMatrix corr(m, m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
        corr(a, a) = 1.0;
        for (std::size_t b = a + 1; b < m; ++b) {
            double r;
            if (var[a] <= 0.0 || var[b] <= 0.0) {
                r = nan;
            } else {
                double cov = 0.0;
                for (std::size_t t = 0; t < n; ++t)
                    cov += (panel.values(t, a) - mean[a]) * (panel.values(t, b) - mean[b]);
                r = cov / std::sqrt(var[a] * var[b]);
                r = std::clamp(r, -1.0, 1.0);
            }
            corr(a, b) = r;
            corr(b, a) = r;
        }
    }
    return corr;
}

/// Sample variance (n-1 denominator) of each asset, used to parameterize the
/// Gaussian-noise threshold study.
inline std::vector<double> asset_variances(const ReturnPanel& panel) {
    std::vector<double> out;
    out.reserve(panel.n_assets());
    const std::size_t n = panel.n_obs();
    for (std::size_t a = 0; a < panel.n_assets(); ++a) {
        double sum = 0.0;
        for (std::size_t t = 0; t < n; ++t) sum += panel.values(t, a);
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double d = panel.values(t, a) - mean;
            ss += d * d;
        }
        out.push_back(n > 1 ? ss / static_cast<double>(n - 1) : 0.0);
    }
    return out;
}

}  // namespace wcnet
