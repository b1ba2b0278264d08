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
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "wcnet/coherence.hpp"
#include "wcnet/common.hpp"
#include "wcnet/matrix.hpp"
#include "wcnet/panel.hpp"

namespace wcnet {

/// Symmetric dissimilarities with zero diagonal, entries in [0,1]:
/// D = 1 - mean squared coherence.
struct DissimMatrix {
    std::vector<std::string> assets;
    RealMatrix values;

    std::size_t size() const { return assets.size(); }
};

inline DissimMatrix dissimilarity_matrix(const BandMatrix& bm) {
    DissimMatrix d;
    d.assets = bm.assets;
    const std::size_t n = bm.assets.size();
    d.values = RealMatrix(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            d.values(i, j) = (i == j) ? 0.0 : 1.0 - bm.mean_r2(i, j);
    return d;
}

/// PAM result. Medoids are asset indices; every asset is assigned to its
/// nearest medoid with ties broken toward the lowest medoid index, so the
/// output is fully deterministic.
struct ClusterAssignment {
    int k = 0;
    std::vector<std::size_t> medoids;
    std::vector<int> labels;  // cluster id = position in `medoids`
    double total_cost = 0.0;
};

namespace detail {

inline double assignment_cost(const RealMatrix& d, const std::vector<std::size_t>& medoids) {
    double cost = 0.0;
    for (std::size_t i = 0; i < d.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t m : medoids) best = std::min(best, d(i, m));
        cost += best;
    }
    return cost;
}

inline void assign_labels(const RealMatrix& d, ClusterAssignment& a) {
    const std::size_t n = d.rows();
    std::vector<std::size_t> order(a.medoids.size());
    for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
    std::sort(order.begin(), order.end(),
              [&](std::size_t u, std::size_t v) { return a.medoids[u] < a.medoids[v]; });

    a.labels.assign(n, -1);
    a.total_cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_cluster = -1;
        for (std::size_t c : order) {
            const double dist = d(i, a.medoids[c]);
            if (dist < best) {  // strict: ties keep the lowest medoid index
                best = dist;
                best_cluster = static_cast<int>(c);
            }
        }
        a.labels[i] = best_cluster;
        a.total_cost += best;
    }
}

}  // namespace detail

namespace detail {

/// Steepest-descent SWAP: accept the best cost-reducing medoid/non-medoid
/// exchange until none remains. Cost is non-increasing and the configuration
/// space is finite, so this terminates.
inline double swap_descent(const RealMatrix& d, std::vector<std::size_t>& medoids) {
    const std::size_t n = d.rows();
    std::vector<bool> is_medoid(n, false);
    for (std::size_t m : medoids) is_medoid[m] = true;
    double cost = assignment_cost(d, medoids);
    for (;;) {
        double best_cost = cost;
        std::size_t swap_out = n, swap_in = n;
        for (std::size_t mi = 0; mi < medoids.size(); ++mi) {
            for (std::size_t c = 0; c < n; ++c) {
                if (is_medoid[c]) continue;
                std::vector<std::size_t> trial = medoids;
                trial[mi] = c;
                const double trial_cost = assignment_cost(d, trial);
                if (trial_cost < best_cost - 1e-15) {
                    best_cost = trial_cost;
                    swap_out = mi;
                    swap_in = c;
                }
            }
        }
        if (swap_in == n) break;
        is_medoid[medoids[swap_out]] = false;
        medoids[swap_out] = swap_in;
        is_medoid[swap_in] = true;
        cost = best_cost;
    }
    return cost;
}

inline std::vector<std::size_t> build_init(const RealMatrix& d, int k) {
    const std::size_t n = d.rows();
    std::vector<std::size_t> medoids;
    std::vector<bool> is_medoid(n, false);
    {
        std::size_t best = 0;
        double best_sum = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) sum += d(i, j);
            if (sum < best_sum) {
                best_sum = sum;
                best = i;
            }
        }
        medoids.push_back(best);
        is_medoid[best] = true;
    }
    std::vector<double> nearest(n);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = d(i, medoids[0]);
    while (medoids.size() < static_cast<std::size_t>(k)) {
        std::size_t best = n;
        double best_gain = -1.0;
        for (std::size_t c = 0; c < n; ++c) {
            if (is_medoid[c]) continue;
            double gain = 0.0;
            for (std::size_t i = 0; i < n; ++i) gain += std::max(0.0, nearest[i] - d(i, c));
            if (gain > best_gain) {
                best_gain = gain;
                best = c;
            }
        }
        medoids.push_back(best);
        is_medoid[best] = true;
        for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], d(i, best));
    }
    return medoids;
}

}  // namespace detail

/// K-medoids via PAM: greedy BUILD initialization followed by steepest SWAP
/// descent, plus a few seeded random-initialization descents to escape the
/// occasional BUILD-basin local optimum; the cheapest converged solution
/// wins. Deterministic given the seed.
inline ClusterAssignment pam(const DissimMatrix& dm, int k, std::uint64_t seed = 0,
                             int restarts = 8) {
    const std::size_t n = dm.size();
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw ConfigError("pam: k must be in [1, n]");
    const RealMatrix& d = dm.values;

    std::vector<std::size_t> best_medoids = detail::build_init(d, k);
    double best_cost = detail::swap_descent(d, best_medoids);

    std::mt19937_64 rng(derive_seed(seed, "pam-restarts"));
    for (int r = 0; r < restarts && static_cast<std::size_t>(k) < n; ++r) {
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        for (int i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, n - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        std::vector<std::size_t> medoids(pool.begin(), pool.begin() + k);
        const double cost = detail::swap_descent(d, medoids);
        if (cost < best_cost - 1e-15) {
            best_cost = cost;
            best_medoids = std::move(medoids);
        }
    }

    ClusterAssignment a;
    a.k = k;
    std::sort(best_medoids.begin(), best_medoids.end());
    a.medoids = std::move(best_medoids);
    detail::assign_labels(d, a);
    return a;
}

/// Within-cluster dispersion in the Gap statistic's pairwise form,
/// W = sum_clusters (1 / (2 |C|)) sum_{i,j in C} D[i][j]. Medoid clustering
/// has no feature-space centroids, so the pairwise form applies directly.
inline double within_dispersion(const DissimMatrix& dm, const ClusterAssignment& a) {
    std::vector<double> sums(a.medoids.size(), 0.0);
    std::vector<std::size_t> counts(a.medoids.size(), 0);
    const std::size_t n = dm.size();
    for (std::size_t i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(a.labels[i])];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (a.labels[i] == a.labels[j]) sums[static_cast<std::size_t>(a.labels[i])] += dm.values(i, j);
    double w = 0.0;
    for (std::size_t c = 0; c < sums.size(); ++c)
        if (counts[c] > 0) w += sums[c] / (2.0 * static_cast<double>(counts[c]));
    return w;
}

/// How reference panels for the Gap statistic are produced. full_pipeline
/// draws a uniform panel over the cross-asset range at each timestamp and
/// pushes it through the entire coherence -> dissimilarity pipeline;
/// uniform_dissim skips the wavelet machinery and draws dissimilarities
/// uniformly over the observed off-diagonal range (cheap test mode).
enum class ReferenceMode { full_pipeline, uniform_dissim };

struct GapCurve {
    int chosen_k = 1;
    std::vector<double> gap;             // index k-1
    std::vector<double> sk;              // reference-dispersion error, index k-1
    std::vector<double> log_w_real;      // index k-1
    std::vector<double> mean_log_w_ref;  // index k-1
};

namespace detail {

inline double log_dispersion(const DissimMatrix& dm, int k) {
    const double w = within_dispersion(dm, pam(dm, k));
    return std::log(std::max(w, 1e-300));
}

inline DissimMatrix uniform_reference_dissim(const DissimMatrix& real, std::mt19937_64& rng) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    const std::size_t n = real.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            lo = std::min(lo, real.values(i, j));
            hi = std::max(hi, real.values(i, j));
        }
    DissimMatrix ref;
    ref.assets = real.assets;
    ref.values = RealMatrix(n, n, 0.0);
    std::uniform_real_distribution<double> u(lo, std::max(hi, lo + 1e-12));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            ref.values(i, j) = ref.values(j, i) = u(rng);
    return ref;
}

inline ReturnPanel uniform_reference_panel(const ReturnPanel& panel, std::mt19937_64& rng) {
    ReturnPanel ref;
    ref.assets = panel.assets;
    ref.dates = panel.dates;
    ref.dt = panel.dt;
    ref.values = RealMatrix(panel.n_obs(), panel.n_assets());
    for (std::size_t t = 0; t < panel.n_obs(); ++t) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < panel.n_assets(); ++a) {
            lo = std::min(lo, panel.values(t, a));
            hi = std::max(hi, panel.values(t, a));
        }
        if (hi - lo < 1e-300) {
            for (std::size_t a = 0; a < panel.n_assets(); ++a) ref.values(t, a) = lo;
        } else {
            std::uniform_real_distribution<double> u(lo, hi);
            for (std::size_t a = 0; a < panel.n_assets(); ++a) ref.values(t, a) = u(rng);
        }
    }
    return ref;
}

}  // namespace detail

/// Selects the number of clusters with the Gap statistic: Gap(k) is the mean
/// reference log-dispersion minus the real one, and the chosen k is the
/// smallest with Gap(k) >= Gap(k+1) - s_{k+1} (one-standard-error rule),
/// falling back to argmax Gap. Reference replicates are uniform panels over
/// the per-timestamp cross-asset range, each run through `dissim_fn`.
/// Deterministic given the seed; replicates carry independent substreams and
/// may run in parallel.
inline GapCurve gap_select_k(const ReturnPanel& panel, const DissimMatrix& d_real, int k_max,
                             int num_refs, std::uint64_t seed,
                             const std::function<DissimMatrix(const ReturnPanel&)>& dissim_fn,
                             ReferenceMode mode = ReferenceMode::full_pipeline,
                             unsigned threads = 1) {
    const std::size_t n = d_real.size();
    if (k_max < 1 || static_cast<std::size_t>(k_max) >= n)
        throw ConfigError("gap_select_k: need 1 <= k_max < n_assets");
    if (num_refs < 1) throw ConfigError("gap_select_k: num_refs must be >= 1");

    GapCurve curve;
    double max_d = 0.0;
    for (double v : d_real.values.data()) max_d = std::max(max_d, v);
    if (max_d <= 0.0) {
        curve.chosen_k = 1;  // degenerate: all assets coincide
        return curve;
    }

    curve.log_w_real.resize(k_max);
    for (int k = 1; k <= k_max; ++k)
        curve.log_w_real[k - 1] = detail::log_dispersion(d_real, k);

    // log W_k for every reference replicate; replicate r owns stream (seed, r).
    std::vector<std::vector<double>> ref_log_w(num_refs, std::vector<double>(k_max));
    parallel_for(static_cast<std::size_t>(num_refs), threads, [&](std::size_t r) {
        std::mt19937_64 rng(derive_seed(seed, "gap-ref", static_cast<std::uint64_t>(r)));
        DissimMatrix d_ref;
        if (mode == ReferenceMode::uniform_dissim) {
            d_ref = detail::uniform_reference_dissim(d_real, rng);
        } else {
            d_ref = dissim_fn(detail::uniform_reference_panel(panel, rng));
        }
        for (int k = 1; k <= k_max; ++k)
            ref_log_w[r][k - 1] = detail::log_dispersion(d_ref, k);
    });

    curve.gap.resize(k_max);
    curve.sk.resize(k_max);
    curve.mean_log_w_ref.resize(k_max);
    for (int k = 1; k <= k_max; ++k) {
        double mean = 0.0;
        for (int r = 0; r < num_refs; ++r) mean += ref_log_w[r][k - 1];
        mean /= num_refs;
        double var = 0.0;
        for (int r = 0; r < num_refs; ++r) {
            const double dlt = ref_log_w[r][k - 1] - mean;
            var += dlt * dlt;
        }
        curve.mean_log_w_ref[k - 1] = mean;
        curve.gap[k - 1] = mean - curve.log_w_real[k - 1];
        curve.sk[k - 1] = std::sqrt(var / num_refs) * std::sqrt(1.0 + 1.0 / num_refs);
    }

    curve.chosen_k = 0;
    for (int k = 1; k < k_max; ++k) {
        if (curve.gap[k - 1] >= curve.gap[k] - curve.sk[k]) {
            curve.chosen_k = k;
            break;
        }
    }
    if (curve.chosen_k == 0) {
        curve.chosen_k = static_cast<int>(
            std::max_element(curve.gap.begin(), curve.gap.end()) - curve.gap.begin() + 1);
    }
    return curve;
}

}  // namespace wcnet
