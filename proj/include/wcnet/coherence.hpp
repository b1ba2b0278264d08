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
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "wcnet/common.hpp"
#include "wcnet/cwt.hpp"
#include "wcnet/matrix.hpp"
#include "wcnet/panel.hpp"
#include "wcnet/smoothing.hpp"

namespace wcnet {

/// Scale interval in days interpreted as an investment horizon. An unbounded
/// upper edge (infinity) is capped at the grid maximum when evaluated.
struct FrequencyBand {
    std::string label;
    double s_lo = 0.0;
    double s_hi = std::numeric_limits<double>::infinity();
};

inline std::vector<FrequencyBand> default_bands() {
    return {{"short", 2.0, 5.0},
            {"medium", 5.0, 22.0},
            {"long", 22.0, std::numeric_limits<double>::infinity()}};
}

enum class CoiPolicy { include, exclude };

/// Inclusive time-index window [first, last].
struct TimeWindow {
    std::size_t first = 0;
    std::size_t last = 0;
};

struct CoherenceOptions {
    SmoothOptions smoothing{};
    double power_floor = 1e-300;  // smoothed power below this counts as zero
};

/// Per-pair coherence results on the common grid. r2 is the squared wavelet
/// coherence in [0,1]; phase is the phase difference in (-pi, pi], positive
/// when x leads y; r2_xy / r2_yx are the oriented coherences, where the
/// lagging direction is attenuated by |cos(phase)|.
struct CoherenceField {
    RealMatrix r2;
    RealMatrix phase;
    RealMatrix r2_xy;  // strength of the link x -> y
    RealMatrix r2_yx;  // strength of the link y -> x
    ScaleGrid grid;
    std::vector<double> coi;
    std::size_t n_flagged = 0;          // cells with vanishing smoothed power
    double max_clamp_correction = 0.0;  // largest |raw - clamped| seen in r2
};

/// Cross-wavelet transform W_x * conj(W_y), entrywise.
inline ComplexMatrix cross_wavelet(const CwtField& wx, const CwtField& wy) {
    if (!wx.coefficients.same_shape(wy.coefficients) ||
        wx.grid.scales != wy.grid.scales || wx.grid.dt != wy.grid.dt)
        throw DataError("cross_wavelet: series were transformed on different grids");
    ComplexMatrix out(wx.coefficients.rows(), wx.coefficients.cols());
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = wx.coefficients.data()[i] * std::conj(wy.coefficients.data()[i]);
    return out;
}

/// S(s^{-1} |W|^2): the smoothed scale-weighted power of one series. Cached
/// per asset and reused as the coherence denominator across all pairs.
inline RealMatrix smoothed_scaled_power(const CwtField& w, const Smoother& smoother) {
    RealMatrix p(w.coefficients.rows(), w.coefficients.cols());
    for (std::size_t j = 0; j < p.rows(); ++j) {
        const double inv_s = 1.0 / w.grid.scales[j];
        const auto* src = w.coefficients.row(j);
        auto* dst = p.row(j);
        for (std::size_t t = 0; t < p.cols(); ++t) dst[t] = inv_s * std::norm(src[t]);
    }
    return smoother(p);
}

namespace detail {

inline void orient_cell(double r2, double phase, double& fwd, double& rev) {
    double attenuation = std::abs(std::cos(phase));
    // a phase within one ulp of +-pi/2 is a right angle: the lagging
    // direction vanishes outright
    if (attenuation < 1e-15) attenuation = 0.0;
    const double penalized = r2 * attenuation;
    if (phase >= 0.0) {
        fwd = r2;
        rev = penalized;
    } else {
        fwd = penalized;
        rev = r2;
    }
}

}  // namespace detail

/// Squared wavelet coherence, phase difference and oriented coherences for a
/// pair whose smoothed scale-weighted powers are already available.
inline CoherenceField coherence_pair_with_power(const CwtField& wx, const CwtField& wy,
                                                const RealMatrix& power_x,
                                                const RealMatrix& power_y,
                                                const Smoother& smoother,
                                                const CoherenceOptions& opts = {}) {
    ComplexMatrix cross = cross_wavelet(wx, wy);
    for (std::size_t j = 0; j < cross.rows(); ++j) {
        const double inv_s = 1.0 / wx.grid.scales[j];
        auto* row = cross.row(j);
        for (std::size_t t = 0; t < cross.cols(); ++t) row[t] *= inv_s;
    }
    const ComplexMatrix num = smoother(cross);

    CoherenceField f;
    f.grid = wx.grid;
    f.coi = wx.coi;
    const std::size_t rows = cross.rows(), cols = cross.cols();
    f.r2 = RealMatrix(rows, cols);
    f.phase = RealMatrix(rows, cols);
    f.r2_xy = RealMatrix(rows, cols);
    f.r2_yx = RealMatrix(rows, cols);

    for (std::size_t j = 0; j < rows; ++j) {
        for (std::size_t t = 0; t < cols; ++t) {
            const std::complex<double> s_xy = num(j, t);
            const double denom = power_x(j, t) * power_y(j, t);
            double r2, phase;
            if (!(denom > opts.power_floor)) {
                r2 = 0.0;
                phase = 0.0;
                ++f.n_flagged;
            } else {
                const double raw = std::norm(s_xy) / denom;
                r2 = std::clamp(raw, 0.0, 1.0);
                f.max_clamp_correction = std::max(f.max_clamp_correction, std::abs(raw - r2));
                phase = std::atan2(s_xy.imag(), s_xy.real());
            }
            f.r2(j, t) = r2;
            f.phase(j, t) = phase;
            detail::orient_cell(r2, phase, f.r2_xy(j, t), f.r2_yx(j, t));
        }
    }
    return f;
}

inline CoherenceField coherence_pair(const CwtField& wx, const CwtField& wy,
                                     const CoherenceOptions& opts = {}) {
    if (!wx.coefficients.same_shape(wy.coefficients))
        throw DataError("coherence_pair: field shapes differ");
    Smoother smoother(wx.grid, wx.n_times, opts.smoothing);
    return coherence_pair_with_power(wx, wy, smoothed_scaled_power(wx, smoother),
                                     smoothed_scaled_power(wy, smoother), smoother, opts);
}

/// Mean of a time-scale field over a frequency band and time window:
/// the normalized trapezoidal double integral over time u and log-scale
/// k = log2(s). Under CoiPolicy::exclude, cells beyond the cone of influence
/// get zero weight and the normalizing area shrinks accordingly.
inline double band_average(const RealMatrix& field, const ScaleGrid& grid,
                           const FrequencyBand& band, TimeWindow window, CoiPolicy policy,
                           std::span<const double> coi) {
    if (field.rows() != grid.num_scales())
        throw InternalError("band_average: field/grid mismatch");
    if (window.first > window.last || window.last >= field.cols())
        throw DataError("band_average: time window out of range");
    if (!(band.s_lo < band.s_hi)) throw ConfigError("band '" + band.label + "': s_lo >= s_hi");

    const double cap = grid.scales.back();
    const double hi = std::min(band.s_hi, cap);
    constexpr double eps = 1e-9;
    std::size_t j_lo = grid.num_scales(), j_hi = 0;
    for (std::size_t j = 0; j < grid.num_scales(); ++j) {
        if (grid.scales[j] >= band.s_lo * (1.0 - eps) && grid.scales[j] <= hi * (1.0 + eps)) {
            j_lo = std::min(j_lo, j);
            j_hi = j;
        }
    }
    if (j_lo == grid.num_scales())
        throw DataError("band '" + band.label + "' does not intersect the scale grid");

    const std::size_t n_sc = j_hi - j_lo + 1;
    const std::size_t n_t = window.last - window.first + 1;
    auto trapezoid = [](std::size_t i, std::size_t m) {
        return (m == 1 || (i > 0 && i + 1 < m)) ? 1.0 : 0.5;
    };

    double weighted = 0.0, weight = 0.0;
    for (std::size_t j = j_lo; j <= j_hi; ++j) {
        const double wj = trapezoid(j - j_lo, n_sc);
        const double s = grid.scales[j];
        for (std::size_t t = window.first; t <= window.last; ++t) {
            if (policy == CoiPolicy::exclude && s > coi[t]) continue;
            const double w = wj * trapezoid(t - window.first, n_t);
            weighted += w * field(j, t);
            weight += w;
        }
    }
    if (weight <= 0.0)
        throw DataError("band '" + band.label + "': empty after cone-of-influence exclusion");
    return weighted / weight;
}

/// Per-band, per-window summary of a panel: mean_r2 is the symmetric matrix
/// of band-averaged squared coherences, mean_oriented(x, y) the band-averaged
/// oriented coherence of the link x -> y. Diagonals are 1 (self-coherence).
struct BandMatrix {
    FrequencyBand band;
    TimeWindow window;
    std::vector<std::string> assets;
    RealMatrix mean_r2;
    RealMatrix mean_oriented;
};

/// Full pairwise sweep: one CWT and one smoothed power per asset, one
/// cross-spectrum smoothing per pair, then band averages for every requested
/// band. The pair loop is the parallelism axis; results do not depend on the
/// evaluation order.
inline std::vector<BandMatrix> band_matrices(const ReturnPanel& panel, const ScaleGrid& grid,
                                             const MorletParams& params,
                                             const CoherenceOptions& opts,
                                             std::span<const FrequencyBand> bands,
                                             CoiPolicy policy, unsigned threads = 1) {
    const std::size_t m = panel.n_assets();
    if (m < 2) throw DataError("band_matrices needs at least 2 assets");
    if (bands.empty()) throw ConfigError("no frequency bands configured");
    const TimeWindow window{0, panel.n_obs() - 1};

    Smoother smoother(grid, panel.n_obs(), opts.smoothing);
    std::vector<CwtField> fields(m);
    std::vector<RealMatrix> powers(m);
    parallel_for(m, threads, [&](std::size_t a) {
        fields[a] = cwt(panel.series(a), grid, params);
        powers[a] = smoothed_scaled_power(fields[a], smoother);
    });

    std::vector<BandMatrix> out;
    out.reserve(bands.size());
    for (const auto& band : bands) {
        BandMatrix bm;
        bm.band = band;
        bm.window = window;
        bm.assets = panel.assets;
        bm.mean_r2 = RealMatrix(m, m, 0.0);
        bm.mean_oriented = RealMatrix(m, m, 0.0);
        for (std::size_t a = 0; a < m; ++a) {
            bm.mean_r2(a, a) = 1.0;
            bm.mean_oriented(a, a) = 1.0;
        }
        out.push_back(std::move(bm));
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t x = 0; x < m; ++x)
        for (std::size_t y = x + 1; y < m; ++y) pairs.emplace_back(x, y);

    parallel_for(pairs.size(), threads, [&](std::size_t p) {
        const auto [x, y] = pairs[p];
        const CoherenceField f =
            coherence_pair_with_power(fields[x], fields[y], powers[x], powers[y], smoother, opts);
        for (std::size_t b = 0; b < bands.size(); ++b) {
            auto& bm = out[b];
            bm.mean_r2(x, y) = bm.mean_r2(y, x) =
                band_average(f.r2, grid, bands[b], window, policy, f.coi);
            bm.mean_oriented(x, y) = band_average(f.r2_xy, grid, bands[b], window, policy, f.coi);
            bm.mean_oriented(y, x) = band_average(f.r2_yx, grid, bands[b], window, policy, f.coi);
        }
    });
    return out;
}

}  // namespace wcnet
