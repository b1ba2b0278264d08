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
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wcnet/clustering.hpp"
#include "wcnet/coherence.hpp"
#include "wcnet/common.hpp"
#include "wcnet/cwt.hpp"

namespace wcnet {

/// Empirical noise-coherence quantile, per band and pooled (max across
/// bands). Edges below this level are indistinguishable from noise.
struct ThresholdEstimate {
    double value = 0.0;  // max across bands
    double quantile = 0.95;
    int reps = 0;
    std::vector<std::string> band_labels;
    std::vector<double> band_values;
};

/// Monte Carlo null distribution of the band-averaged squared coherence
/// between independent Gaussian noise series. Each repetition draws a pair
/// of variances from the real assets' variance set (or cycles through
/// `fixed_pairs` when supplied), simulates two independent series, and runs
/// them through the identical coherence pipeline. Returns the empirical
/// `quantile` of the band averages across repetitions, per band.
inline ThresholdEstimate noise_threshold(std::span<const double> variances, std::size_t n,
                                         const ScaleGrid& grid, const MorletParams& params,
                                         const CoherenceOptions& opts,
                                         std::span<const FrequencyBand> bands, int reps,
                                         double quantile, std::uint64_t seed,
                                         CoiPolicy policy = CoiPolicy::include,
                                         unsigned threads = 1,
                                         std::span<const std::pair<double, double>> fixed_pairs = {}) {
    if (reps < 1) throw ConfigError("noise_threshold: reps must be >= 1");
    if (quantile <= 0.0 || quantile > 1.0)
        throw ConfigError("noise_threshold: quantile must be in (0, 1]");
    if (variances.empty()) throw ConfigError("noise_threshold: no variances supplied");
    if (bands.empty()) throw ConfigError("noise_threshold: no bands supplied");

    const TimeWindow window{0, n - 1};
    Smoother smoother(grid, n, opts.smoothing);
    std::vector<std::vector<double>> samples(bands.size(), std::vector<double>(reps));

    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
        std::mt19937_64 rng(derive_seed(seed, "noise-rep", static_cast<std::uint64_t>(r)));
        double var_a, var_b;
        if (!fixed_pairs.empty()) {
            const auto& p = fixed_pairs[r % fixed_pairs.size()];
            var_a = p.first;
            var_b = p.second;
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, variances.size() - 1);
            var_a = variances[pick(rng)];
            var_b = variances[pick(rng)];
        }
        std::normal_distribution<double> ga(0.0, std::sqrt(var_a));
        std::normal_distribution<double> gb(0.0, std::sqrt(var_b));
        std::vector<double> xa(n), xb(n);
        for (std::size_t t = 0; t < n; ++t) xa[t] = ga(rng);
        for (std::size_t t = 0; t < n; ++t) xb[t] = gb(rng);

        const CwtField wa = cwt(xa, grid, params);
        const CwtField wb = cwt(xb, grid, params);
        const CoherenceField f = coherence_pair_with_power(
            wa, wb, smoothed_scaled_power(wa, smoother), smoothed_scaled_power(wb, smoother),
            smoother, opts);
        for (std::size_t b = 0; b < bands.size(); ++b)
            samples[b][r] = band_average(f.r2, grid, bands[b], window, policy, f.coi);
    });

    ThresholdEstimate est;
    est.quantile = quantile;
    est.reps = reps;
    for (std::size_t b = 0; b < bands.size(); ++b) {
        auto& v = samples[b];
        std::sort(v.begin(), v.end());
        const auto rank = static_cast<std::size_t>(std::max(
            1.0, std::ceil(quantile * static_cast<double>(reps))));
        est.band_labels.push_back(bands[b].label);
        est.band_values.push_back(v[rank - 1]);
        est.value = std::max(est.value, v[rank - 1]);
    }
    return est;
}

struct NetworkNode {
    std::string id;
    int cluster = 0;
    double strength = 0.0;  // mean outgoing oriented coherence (node size)
};

/// Displayed pair (src < dst) with its two directed weights. weight_fwd is
/// the mean oriented coherence src -> dst, weight_rev the reverse, and
/// display_weight the symmetric mean coherence that gated the edge.
struct NetworkEdge {
    std::size_t src = 0;
    std::size_t dst = 0;
    double weight_fwd = 0.0;
    double weight_rev = 0.0;
    double display_weight = 0.0;
};

struct Network {
    std::vector<NetworkNode> nodes;
    std::vector<NetworkEdge> edges;
    FrequencyBand band;
    std::string window_label;
    double threshold = 0.0;

    friend bool operator==(const Network& a, const Network& b) {
        auto node_eq = [](const NetworkNode& x, const NetworkNode& y) {
            return x.id == y.id && x.cluster == y.cluster && x.strength == y.strength;
        };
        auto edge_eq = [](const NetworkEdge& x, const NetworkEdge& y) {
            return x.src == y.src && x.dst == y.dst && x.weight_fwd == y.weight_fwd &&
                   x.weight_rev == y.weight_rev && x.display_weight == y.display_weight;
        };
        return a.nodes.size() == b.nodes.size() && a.edges.size() == b.edges.size() &&
               std::equal(a.nodes.begin(), a.nodes.end(), b.nodes.begin(), node_eq) &&
               std::equal(a.edges.begin(), a.edges.end(), b.edges.begin(), edge_eq) &&
               a.band.label == b.band.label && a.band.s_lo == b.band.s_lo &&
               a.band.s_hi == b.band.s_hi && a.window_label == b.window_label &&
               a.threshold == b.threshold;
    }
};

/// Assembles the directed network: a display edge (x, y) exists iff the mean
/// squared coherence exceeds the threshold, and carries both directed
/// weights. Node strength is the mean of the outgoing oriented coherences to
/// all other nodes, the paper's node-size rule.
inline Network build_network(const BandMatrix& bm, const ClusterAssignment& clusters,
                             double threshold, const std::string& window_label = "") {
    const std::size_t n = bm.assets.size();
    if (clusters.labels.size() != n)
        throw DataError("build_network: cluster assignment does not match the asset list");

    Network net;
    net.band = bm.band;
    net.window_label = window_label;
    net.threshold = threshold;
    net.nodes.reserve(n);
    for (std::size_t x = 0; x < n; ++x) {
        NetworkNode node;
        node.id = bm.assets[x];
        node.cluster = clusters.labels[x];
        double sum = 0.0;
        for (std::size_t y = 0; y < n; ++y)
            if (y != x) sum += bm.mean_oriented(x, y);
        node.strength = (n > 1) ? sum / static_cast<double>(n - 1) : 0.0;
        net.nodes.push_back(std::move(node));
    }
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = x + 1; y < n; ++y) {
            if (bm.mean_r2(x, y) > threshold) {
                net.edges.push_back({x, y, bm.mean_oriented(x, y), bm.mean_oriented(y, x),
                                     bm.mean_r2(x, y)});
            }
        }
    }
    return net;
}

namespace detail {

inline std::string dot_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
    return out;
}

using wcnet::detail::format_double;

inline const char* cluster_color(int cluster) {
    // colorbrewer Set3; cycles past 12 clusters.
    static constexpr const char* palette[] = {
        "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462",
        "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f"};
    return palette[cluster % 12];
}

}  // namespace detail

/// Graphviz DOT rendering. Each displayed pair is one `dir=both` edge whose
/// ink darkness and penwidth scale with the symmetric mean coherence; the
/// per-direction arrowhead sizes are carried by the arrowheadsize /
/// arrowtailsize attributes (values are the oriented means themselves, for
/// the figure-generation tooling to scale). Node width equals the node
/// strength, fill color follows the cluster.
inline void export_dot(const Network& net, std::ostream& os) {
    os << "digraph coherence_network {\n";
    os << "  graph [band=" << detail::dot_quote(net.band.label)
       << ", window=" << detail::dot_quote(net.window_label)
       << ", s_lo=" << detail::format_double(net.band.s_lo) << ", s_hi="
       << (std::isinf(net.band.s_hi) ? std::string("\"inf\"") : detail::format_double(net.band.s_hi))
       << ", threshold=" << detail::format_double(net.threshold) << "];\n";
    os << "  node [shape=circle, style=filled];\n";
    for (const auto& node : net.nodes) {
        os << "  " << detail::dot_quote(node.id) << " [cluster=" << node.cluster
           << ", fillcolor=\"" << detail::cluster_color(node.cluster) << "\""
           << ", width=" << detail::format_double(node.strength, 4)
           << ", strength=" << detail::format_double(node.strength) << "];\n";
    }
    for (const auto& e : net.edges) {
        const int gray = static_cast<int>(std::lround(80.0 * (1.0 - e.display_weight)));
        os << "  " << detail::dot_quote(net.nodes[e.src].id) << " -> "
           << detail::dot_quote(net.nodes[e.dst].id) << " [dir=both, color=\"gray"
           << std::clamp(gray, 0, 100) << "\", penwidth="
           << detail::format_double(0.5 + 3.0 * e.display_weight, 4)
           << ", arrowheadsize=" << detail::format_double(e.weight_fwd)
           << ", arrowtailsize=" << detail::format_double(e.weight_rev)
           << ", display=" << detail::format_double(e.display_weight) << "];\n";
    }
    os << "}\n";
}

inline nlohmann::json network_to_json(const Network& net) {
    nlohmann::json j;
    j["schema"] = "wcnet.network/1";
    j["band"]["label"] = net.band.label;
    j["band"]["s_lo"] = net.band.s_lo;
    if (std::isinf(net.band.s_hi))
        j["band"]["s_hi"] = nullptr;
    else
        j["band"]["s_hi"] = net.band.s_hi;
    j["window"] = net.window_label;
    j["threshold"] = net.threshold;
    j["nodes"] = nlohmann::json::array();
    for (const auto& node : net.nodes)
        j["nodes"].push_back(
            {{"id", node.id}, {"cluster", node.cluster}, {"strength", node.strength}});
    j["edges"] = nlohmann::json::array();
    for (const auto& e : net.edges)
        j["edges"].push_back({{"source", net.nodes[e.src].id},
                              {"target", net.nodes[e.dst].id},
                              {"fwd", e.weight_fwd},
                              {"rev", e.weight_rev},
                              {"display", e.display_weight}});
    return j;
}

inline void export_json(const Network& net, std::ostream& os) {
    os << network_to_json(net).dump(2) << "\n";
}

inline Network network_from_json(const nlohmann::json& j) {
    if (j.value("schema", "") != "wcnet.network/1")
        throw DataError("unrecognized network schema");
    Network net;
    net.band.label = j.at("band").at("label").get<std::string>();
    net.band.s_lo = j.at("band").at("s_lo").get<double>();
    net.band.s_hi = j.at("band").at("s_hi").is_null()
                        ? std::numeric_limits<double>::infinity()
                        : j.at("band").at("s_hi").get<double>();
    net.window_label = j.at("window").get<std::string>();
    net.threshold = j.at("threshold").get<double>();
    std::vector<std::string> ids;
    for (const auto& nj : j.at("nodes")) {
        NetworkNode node;
        node.id = nj.at("id").get<std::string>();
        node.cluster = nj.at("cluster").get<int>();
        node.strength = nj.at("strength").get<double>();
        ids.push_back(node.id);
        net.nodes.push_back(std::move(node));
    }
    auto index_of = [&](const std::string& id) {
        const auto it = std::find(ids.begin(), ids.end(), id);
        if (it == ids.end()) throw DataError("network edge references unknown node " + id);
        return static_cast<std::size_t>(it - ids.begin());
    };
    for (const auto& ej : j.at("edges")) {
        NetworkEdge e;
        e.src = index_of(ej.at("source").get<std::string>());
        e.dst = index_of(ej.at("target").get<std::string>());
        e.weight_fwd = ej.at("fwd").get<double>();
        e.weight_rev = ej.at("rev").get<double>();
        e.display_weight = ej.at("display").get<double>();
        net.edges.push_back(e);
    }
    return net;
}

inline Network parse_network_json(std::istream& is) {
    nlohmann::json j;
    is >> j;
    return network_from_json(j);
}

/// Two delimited adjacency blocks: the symmetric display weights and the
/// directed oriented weights, zero where the edge is suppressed, unit
/// diagonal (self-coherence).
inline void export_adjacency(const Network& net, std::ostream& os, char delim = ',') {
    const std::size_t n = net.nodes.size();
    RealMatrix display(n, n, 0.0), oriented(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) display(i, i) = oriented(i, i) = 1.0;
    for (const auto& e : net.edges) {
        display(e.src, e.dst) = display(e.dst, e.src) = e.display_weight;
        oriented(e.src, e.dst) = e.weight_fwd;
        oriented(e.dst, e.src) = e.weight_rev;
    }
    auto write_block = [&](const char* title, const RealMatrix& m) {
        os << "# " << title << "\n";
        for (std::size_t i = 0; i < n; ++i) os << delim << net.nodes[i].id;
        os << "\n";
        for (std::size_t i = 0; i < n; ++i) {
            os << net.nodes[i].id;
            for (std::size_t j = 0; j < n; ++j)
                os << delim << detail::format_double(m(i, j), 12);
            os << "\n";
        }
    };
    write_block("display_weight", display);
    os << "\n";
    write_block("oriented_weight", oriented);
}

enum class GraphFormat { dot, json, adjacency };

inline void export_graph(const Network& net, GraphFormat format,
                         const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write graph file: " + path.string());
    switch (format) {
        case GraphFormat::dot: export_dot(net, os); break;
        case GraphFormat::json: export_json(net, os); break;
        case GraphFormat::adjacency: export_adjacency(net, os); break;
    }
    if (!os.good()) throw DataError("failed while writing graph file: " + path.string());
}

}  // namespace wcnet
