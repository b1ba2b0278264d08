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

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wcnet/clustering.hpp"
#include "wcnet/coherence.hpp"
#include "wcnet/common.hpp"
#include "wcnet/cwt.hpp"
#include "wcnet/io.hpp"
#include "wcnet/netgraph.hpp"
#include "wcnet/panel.hpp"
#include "wcnet/stats.hpp"

namespace wcnet {

struct SubPeriod {
    std::string label;
    Date start;
    Date end;
};

/// The dated crisis windows studied alongside the full sample: the European
/// sovereign debt crisis, the 2014-16 oil price collapse, and COVID-19.
inline std::vector<SubPeriod> default_subperiods() {
    return {{"debt_crisis", Date::from_ymd(2010, 10, 13), Date::from_ymd(2012, 7, 31)},
            {"oil_collapse", Date::from_ymd(2014, 6, 20), Date::from_ymd(2016, 2, 28)},
            {"covid19", Date::from_ymd(2020, 1, 1), Date::from_ymd(2020, 11, 13)}};
}

struct GridConfig {
    double s0 = 0.0;     // 0 = auto (2 * dt)
    double s_max = 0.0;  // 0 = auto (n * dt / 5)
    int voices_per_octave = 12;
};

struct GapConfig {
    int k_max = 6;
    int num_refs = 50;
    ReferenceMode reference_mode = ReferenceMode::full_pipeline;
};

struct ThresholdConfig {
    int reps = 100;
    double quantile = 0.95;
    /// When set, networks use this level instead of the Monte Carlo estimate
    /// and the noise study is skipped during `run`. 0.38 reproduces the
    /// figures' display rule.
    std::optional<double> fixed = 0.38;
};

struct PipelineConfig {
    std::filesystem::path input;
    CsvOptions csv{};
    double return_scale = 1.0;
    double dt = 1.0;
    GridConfig grid{};
    MorletParams morlet{};
    SmoothOptions smoothing{};
    std::vector<FrequencyBand> bands = default_bands();
    std::vector<SubPeriod> subperiods = default_subperiods();
    CoiPolicy coi_policy = CoiPolicy::include;
    GapConfig gap{};
    bool clustering_enabled = true;
    ThresholdConfig threshold{};
    std::uint64_t seed = 42;
    std::filesystem::path output_dir = "out";
    unsigned threads = 0;  // 0 = hardware concurrency
    bool dump_power = false;
};

// ---------------------------------------------------------------------------
// Config (de)serialization: a single nested JSON document, every value
// mirrored by a CLI flag. Missing keys keep their defaults, so committed
// configs stay minimal.

inline nlohmann::json config_to_json(const PipelineConfig& c) {
    nlohmann::json j;
    j["input"]["path"] = c.input.string();
    j["input"]["delimiter"] = std::string(1, c.csv.delimiter);
    j["input"]["date_column"] = c.csv.date_column;
    j["input"]["date_format"] = c.csv.date_format;
    j["returns"]["scale"] = c.return_scale;
    j["returns"]["dt"] = c.dt;
    j["grid"]["s0"] = c.grid.s0;
    j["grid"]["s_max"] = c.grid.s_max;
    j["grid"]["voices_per_octave"] = c.grid.voices_per_octave;
    j["morlet"]["omega0"] = c.morlet.omega0;
    j["smoothing"]["time_sigma_factor"] = c.smoothing.time_sigma_factor;
    j["smoothing"]["time_truncate_sigmas"] = c.smoothing.time_truncate_sigmas;
    j["smoothing"]["scale_octaves"] = c.smoothing.scale_octaves;
    j["bands"] = nlohmann::json::array();
    for (const auto& b : c.bands) {
        nlohmann::json bj;
        bj["label"] = b.label;
        bj["s_lo"] = b.s_lo;
        if (std::isinf(b.s_hi))
            bj["s_hi"] = nullptr;
        else
            bj["s_hi"] = b.s_hi;
        j["bands"].push_back(bj);
    }
    j["subperiods"] = nlohmann::json::array();
    for (const auto& p : c.subperiods)
        j["subperiods"].push_back(
            {{"label", p.label}, {"start", p.start.to_iso()}, {"end", p.end.to_iso()}});
    j["coi_policy"] = (c.coi_policy == CoiPolicy::exclude) ? "exclude" : "include";
    j["gap"]["k_max"] = c.gap.k_max;
    j["gap"]["num_refs"] = c.gap.num_refs;
    j["gap"]["reference_mode"] =
        (c.gap.reference_mode == ReferenceMode::uniform_dissim) ? "cheap" : "full";
    j["clustering"]["enabled"] = c.clustering_enabled;
    j["threshold"]["reps"] = c.threshold.reps;
    j["threshold"]["quantile"] = c.threshold.quantile;
    if (c.threshold.fixed)
        j["threshold"]["fixed"] = *c.threshold.fixed;
    else
        j["threshold"]["fixed"] = nullptr;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir.string();
    j["threads"] = c.threads;
    j["dump_power"] = c.dump_power;
    return j;
}

inline PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig c = {}) {
    try {
        if (j.contains("input")) {
            const auto& i = j.at("input");
            if (i.contains("path")) c.input = i.at("path").get<std::string>();
            if (i.contains("delimiter")) {
                const auto d = i.at("delimiter").get<std::string>();
                if (d.size() != 1) throw ConfigError("input.delimiter must be one character");
                c.csv.delimiter = d[0];
            }
            if (i.contains("date_column")) c.csv.date_column = i.at("date_column");
            if (i.contains("date_format")) c.csv.date_format = i.at("date_format");
        }
        if (j.contains("returns")) {
            const auto& r = j.at("returns");
            if (r.contains("scale")) c.return_scale = r.at("scale");
            if (r.contains("dt")) c.dt = r.at("dt");
        }
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            if (g.contains("s0")) c.grid.s0 = g.at("s0");
            if (g.contains("s_max")) c.grid.s_max = g.at("s_max");
            if (g.contains("voices_per_octave"))
                c.grid.voices_per_octave = g.at("voices_per_octave");
        }
        if (j.contains("morlet") && j.at("morlet").contains("omega0"))
            c.morlet.omega0 = j.at("morlet").at("omega0");
        if (j.contains("smoothing")) {
            const auto& s = j.at("smoothing");
            if (s.contains("time_sigma_factor")) c.smoothing.time_sigma_factor = s.at("time_sigma_factor");
            if (s.contains("time_truncate_sigmas"))
                c.smoothing.time_truncate_sigmas = s.at("time_truncate_sigmas");
            if (s.contains("scale_octaves")) c.smoothing.scale_octaves = s.at("scale_octaves");
        }
        if (j.contains("bands")) {
            c.bands.clear();
            for (const auto& bj : j.at("bands")) {
                FrequencyBand b;
                b.label = bj.at("label").get<std::string>();
                b.s_lo = bj.at("s_lo");
                b.s_hi = (!bj.contains("s_hi") || bj.at("s_hi").is_null())
                             ? std::numeric_limits<double>::infinity()
                             : bj.at("s_hi").get<double>();
                c.bands.push_back(std::move(b));
            }
        }
        if (j.contains("subperiods")) {
            c.subperiods.clear();
            for (const auto& pj : j.at("subperiods")) {
                SubPeriod p;
                p.label = pj.at("label").get<std::string>();
                p.start = Date::parse(pj.at("start").get<std::string>());
                p.end = Date::parse(pj.at("end").get<std::string>());
                c.subperiods.push_back(std::move(p));
            }
        }
        if (j.contains("coi_policy")) {
            const auto p = j.at("coi_policy").get<std::string>();
            if (p == "include")
                c.coi_policy = CoiPolicy::include;
            else if (p == "exclude")
                c.coi_policy = CoiPolicy::exclude;
            else
                throw ConfigError("coi_policy must be 'include' or 'exclude'");
        }
        if (j.contains("gap")) {
            const auto& g = j.at("gap");
            if (g.contains("k_max")) c.gap.k_max = g.at("k_max");
            if (g.contains("num_refs")) c.gap.num_refs = g.at("num_refs");
            if (g.contains("reference_mode")) {
                const auto m = g.at("reference_mode").get<std::string>();
                if (m == "full")
                    c.gap.reference_mode = ReferenceMode::full_pipeline;
                else if (m == "cheap")
                    c.gap.reference_mode = ReferenceMode::uniform_dissim;
                else
                    throw ConfigError("gap.reference_mode must be 'full' or 'cheap'");
            }
        }
        if (j.contains("clustering") && j.at("clustering").contains("enabled"))
            c.clustering_enabled = j.at("clustering").at("enabled");
        if (j.contains("threshold")) {
            const auto& t = j.at("threshold");
            if (t.contains("reps")) c.threshold.reps = t.at("reps");
            if (t.contains("quantile")) c.threshold.quantile = t.at("quantile");
            if (t.contains("fixed")) {
                if (t.at("fixed").is_null())
                    c.threshold.fixed.reset();
                else
                    c.threshold.fixed = t.at("fixed").get<double>();
            }
        }
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
        if (j.contains("dump_power")) c.dump_power = j.at("dump_power").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return config_from_json(j, std::move(base));
}

/// All violations found, none fixed, no side effects. An empty result means
/// the config is runnable (up to data-dependent conditions).
inline std::vector<std::string> validate_config(const PipelineConfig& c) {
    std::vector<std::string> diags;
    auto add = [&](std::string msg) { diags.push_back(std::move(msg)); };

    std::size_t asset_count = 0;
    if (c.input.empty()) {
        add("input.path is not set");
    } else if (!std::filesystem::exists(c.input)) {
        add("input file does not exist: " + c.input.string());
    } else {
        try {
            std::ifstream in(c.input);
            std::string header;
            if (!std::getline(in, header)) {
                add("input file is empty: " + c.input.string());
            } else {
                const auto fields = detail::split_delimited(header, c.csv.delimiter);
                bool date_found = false;
                for (const auto& f : fields) {
                    if (detail::trim(f) == c.csv.date_column && !date_found)
                        date_found = true;
                    else
                        ++asset_count;
                }
                if (!date_found)
                    add("date column '" + c.csv.date_column + "' not found in input header");
                if (asset_count < 2) add("input has fewer than 2 asset columns");
            }
        } catch (const std::exception& e) {
            add(std::string("cannot inspect input: ") + e.what());
        }
    }

    if (c.return_scale <= 0.0) add("returns.scale must be positive");
    if (c.dt <= 0.0) add("returns.dt must be positive");
    if (c.grid.voices_per_octave < 1) add("grid.voices_per_octave must be >= 1");
    if (c.grid.s0 != 0.0 && c.grid.s0 < 2.0 * c.dt)
        add("grid.s0 must be >= 2*dt (Nyquist)");
    if (c.grid.s_max != 0.0 && c.grid.s0 != 0.0 && c.grid.s_max < c.grid.s0)
        add("grid.s_max is below grid.s0");
    if (c.morlet.omega0 <= 0.0) add("morlet.omega0 must be positive");
    if (c.smoothing.time_sigma_factor <= 0.0) add("smoothing.time_sigma_factor must be positive");
    if (c.smoothing.time_truncate_sigmas <= 0.0)
        add("smoothing.time_truncate_sigmas must be positive");
    if (c.smoothing.scale_octaves < 0.0) add("smoothing.scale_octaves must be >= 0");

    if (c.bands.empty()) add("no frequency bands configured");
    for (const auto& b : c.bands) {
        if (b.label.empty()) add("a band has an empty label");
        if (b.s_lo <= 0.0) add("band '" + b.label + "': s_lo must be positive");
        if (!(b.s_lo < b.s_hi))
            add("band '" + b.label + "': s_lo >= s_hi");
        if (b.label.find_first_of("/\\") != std::string::npos)
            add("band '" + b.label + "': label must not contain path separators");
    }
    for (const auto& p : c.subperiods) {
        if (p.label.empty()) add("a sub-period has an empty label");
        if (p.start > p.end) add("sub-period '" + p.label + "': start is after end");
        if (p.label == "full") add("sub-period label 'full' is reserved for the full sample");
        if (p.label.find_first_of("/\\") != std::string::npos)
            add("sub-period '" + p.label + "': label must not contain path separators");
    }

    if (c.gap.k_max < 1) add("gap.k_max must be >= 1");
    if (asset_count >= 2 && static_cast<std::size_t>(c.gap.k_max) >= asset_count)
        add("gap.k_max = " + std::to_string(c.gap.k_max) + " must be below the asset count " +
            std::to_string(asset_count));
    if (c.gap.num_refs < 1) add("gap.num_refs must be >= 1");
    if (c.threshold.reps < 1) add("threshold.reps must be >= 1");
    if (c.threshold.quantile <= 0.0 || c.threshold.quantile > 1.0)
        add("threshold.quantile must be in (0, 1]");
    if (c.threshold.fixed && (*c.threshold.fixed < 0.0 || *c.threshold.fixed > 1.0))
        add("threshold.fixed must be in [0, 1]");
    if (c.output_dir.empty()) add("output_dir is not set");
    return diags;
}

// ---------------------------------------------------------------------------
// Run manifest and pipeline driver.

struct Artifact {
    std::string window;
    std::string band;  // empty for window-level artifacts
    std::string kind;
    std::string path;  // relative to the output directory
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

/// Record of one pipeline run. The manifest file holds the resolved config,
/// the input fingerprint and every artifact, and is written last. Wall-clock
/// timings live in a separate diagnostic sidecar (timings.json) so the
/// manifest itself is byte-reproducible for identical (config, input, seed).
struct RunManifest {
    nlohmann::json resolved_config;
    std::string input_fingerprint;
    std::string version;
    std::vector<Artifact> artifacts;
    std::vector<StageTiming> timings;
    std::filesystem::path manifest_path;
};

namespace detail {

inline std::string fingerprint_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read input file: " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

template <typename Fn>
auto run_stage(const std::string& stage, std::vector<StageTiming>& timings, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto tag = [&](const char* what) {
        return "stage '" + stage + "': " + what;
    };
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            timings.push_back({stage, std::chrono::duration<double>(
                                          std::chrono::steady_clock::now() - t0).count()});
        } else {
            auto result = fn();
            timings.push_back({stage, std::chrono::duration<double>(
                                          std::chrono::steady_clock::now() - t0).count()});
            return result;
        }
    } catch (const ConfigError& e) {
        throw ConfigError(tag(e.what()));
    } catch (const DataError& e) {
        throw DataError(tag(e.what()));
    } catch (const std::exception& e) {
        throw InternalError(tag(e.what()));
    }
}

}  // namespace detail

/// Runs the whole pipeline: ingest -> returns -> per window (stats, CWT,
/// coherence band matrices, threshold, clustering, networks); artifact names
/// follow <window>__<band>__<artifact>.<ext>. A failing stage removes the
/// partial artifacts and rethrows with the stage tag; the manifest is only
/// written after everything else succeeded.
inline RunManifest run_pipeline(const PipelineConfig& config) {
    {
        const auto diags = validate_config(config);
        if (!diags.empty()) {
            std::string msg = "invalid config:";
            for (const auto& d : diags) msg += "\n  - " + d;
            throw ConfigError(msg);
        }
    }

    RunManifest manifest;
    manifest.version = library_version;
    manifest.resolved_config = config_to_json(config);

    std::filesystem::create_directories(config.output_dir);
    std::vector<std::filesystem::path> written;
    auto emit = [&](const std::string& window, const std::string& band, const std::string& kind,
                    const std::string& filename,
                    const std::function<void(std::ostream&)>& writer) {
        const auto path = config.output_dir / filename;
        auto os = open_output(path);
        writer(os);
        if (!os.good()) throw DataError("failed while writing " + path.string());
        written.push_back(path);
        manifest.artifacts.push_back({window, band, kind, filename});
    };

    try {
        manifest.input_fingerprint = detail::fingerprint_file(config.input);

        const ReturnPanel full_panel = detail::run_stage("ingest", manifest.timings, [&] {
            auto table = align_and_clean(load_price_table(config.input, config.csv));
            auto panel = log_returns(table, config.return_scale);
            panel.dt = config.dt;
            return panel;
        });

        std::vector<std::pair<std::string, ReturnPanel>> windows;
        windows.emplace_back("full", full_panel);
        for (const auto& period : config.subperiods) {
            windows.emplace_back(period.label,
                                 detail::run_stage("slice:" + period.label, manifest.timings, [&] {
                                     return slice_period(full_panel, period.start, period.end);
                                 }));
        }

        for (const auto& [window_label, panel] : windows) {
            const std::string w = window_label;
            const std::size_t n = panel.n_obs();

            detail::run_stage("stats:" + w, manifest.timings, [&] {
                const auto stats = descriptive_stats(panel);
                emit(w, "", "stats", w + "__stats.csv",
                     [&](std::ostream& os) { write_stats_csv(stats, os, config.csv.delimiter); });
                const auto corr = pearson_matrix(panel);
                emit(w, "", "pearson", w + "__pearson.csv", [&](std::ostream& os) {
                    write_matrix_csv(corr, panel.assets, os, config.csv.delimiter);
                });
            });

            const ScaleGrid grid = detail::run_stage("grid:" + w, manifest.timings, [&] {
                const double s0 = config.grid.s0 > 0.0 ? config.grid.s0 : 2.0 * config.dt;
                const double s_max = config.grid.s_max > 0.0
                                         ? config.grid.s_max
                                         : static_cast<double>(n) * config.dt / 5.0;
                return make_scale_grid(n, config.dt, config.grid.voices_per_octave, s0, s_max);
            });

            CoherenceOptions copts;
            copts.smoothing = config.smoothing;

            const std::vector<BandMatrix> mats =
                detail::run_stage("coherence:" + w, manifest.timings, [&] {
                    return band_matrices(panel, grid, config.morlet, copts, config.bands,
                                         config.coi_policy, config.threads);
                });

            for (const auto& bm : mats) {
                const std::string b = bm.band.label;
                emit(w, b, "coherence_mean", w + "__" + b + "__coherence_mean.csv",
                     [&](std::ostream& os) {
                         write_matrix_csv(bm.mean_r2, bm.assets, os, config.csv.delimiter);
                     });
                emit(w, b, "oriented_mean", w + "__" + b + "__oriented_mean.csv",
                     [&](std::ostream& os) {
                         write_matrix_csv(bm.mean_oriented, bm.assets, os, config.csv.delimiter);
                     });
                emit(w, b, "band_matrix", w + "__" + b + "__band_matrix.json",
                     [&](std::ostream& os) {
                         nlohmann::json j;
                         j["schema"] = "wcnet.band_matrix/1";
                         j["window"] = w;
                         j["window_start"] = panel.dates.front().to_iso();
                         j["window_end"] = panel.dates.back().to_iso();
                         j["band"]["label"] = bm.band.label;
                         j["band"]["s_lo"] = bm.band.s_lo;
                         if (std::isinf(bm.band.s_hi))
                             j["band"]["s_hi"] = nullptr;
                         else
                             j["band"]["s_hi"] = bm.band.s_hi;
                         j["assets"] = bm.assets;
                         j["mean_r2"] = nlohmann::json::array();
                         j["mean_oriented"] = nlohmann::json::array();
                         for (std::size_t i = 0; i < bm.assets.size(); ++i) {
                             nlohmann::json r2_row = nlohmann::json::array();
                             nlohmann::json or_row = nlohmann::json::array();
                             for (std::size_t k = 0; k < bm.assets.size(); ++k) {
                                 r2_row.push_back(bm.mean_r2(i, k));
                                 or_row.push_back(bm.mean_oriented(i, k));
                             }
                             j["mean_r2"].push_back(std::move(r2_row));
                             j["mean_oriented"].push_back(std::move(or_row));
                         }
                         os << j.dump(2) << "\n";
                     });
            }

            // Threshold: fixed override or Monte Carlo noise study.
            std::optional<ThresholdEstimate> estimate;
            if (!config.threshold.fixed) {
                estimate = detail::run_stage("threshold:" + w, manifest.timings, [&] {
                    return noise_threshold(asset_variances(panel), n, grid, config.morlet, copts,
                                           config.bands, config.threshold.reps,
                                           config.threshold.quantile,
                                           derive_seed(config.seed, "threshold", w),
                                           config.coi_policy, config.threads);
                });
            }
            auto threshold_for = [&](const std::string& band_label) {
                if (config.threshold.fixed) return *config.threshold.fixed;
                for (std::size_t b = 0; b < estimate->band_labels.size(); ++b)
                    if (estimate->band_labels[b] == band_label) return estimate->band_values[b];
                throw InternalError("no threshold for band " + band_label);
            };
            emit(w, "", "threshold", w + "__threshold.json", [&](std::ostream& os) {
                nlohmann::json j;
                j["schema"] = "wcnet.threshold/1";
                j["window"] = w;
                if (config.threshold.fixed) {
                    j["fixed"] = *config.threshold.fixed;
                    j["bands"] = nullptr;
                } else {
                    j["fixed"] = nullptr;
                    j["quantile"] = estimate->quantile;
                    j["reps"] = estimate->reps;
                    j["value"] = estimate->value;
                    j["bands"] = nlohmann::json::object();
                    for (std::size_t b = 0; b < estimate->band_labels.size(); ++b)
                        j["bands"][estimate->band_labels[b]] = estimate->band_values[b];
                }
                os << j.dump(2) << "\n";
            });

            if (config.clustering_enabled) {
                for (const auto& bm : mats) {
                    const std::string b = bm.band.label;
                    const auto d = dissimilarity_matrix(bm);

                    const GapCurve curve =
                        detail::run_stage("gap:" + w + ":" + b, manifest.timings, [&] {
                            auto dissim_fn = [&](const ReturnPanel& ref) {
                                const std::vector<FrequencyBand> one{bm.band};
                                auto ref_mats =
                                    band_matrices(ref, grid, config.morlet, copts, one,
                                                  config.coi_policy, 1);
                                return dissimilarity_matrix(ref_mats.front());
                            };
                            return gap_select_k(panel, d, config.gap.k_max, config.gap.num_refs,
                                                derive_seed(config.seed, "gap", w, b), dissim_fn,
                                                config.gap.reference_mode, config.threads);
                        });
                    const ClusterAssignment clusters =
                        detail::run_stage("pam:" + w + ":" + b, manifest.timings,
                                          [&] { return pam(d, curve.chosen_k); });

                    emit(w, b, "clusters", w + "__" + b + "__clusters.json",
                         [&](std::ostream& os) {
                             nlohmann::json j;
                             j["schema"] = "wcnet.clusters/1";
                             j["window"] = w;
                             j["band"] = b;
                             j["k"] = clusters.k;
                             j["medoids"] = nlohmann::json::array();
                             for (auto m : clusters.medoids) j["medoids"].push_back(d.assets[m]);
                             j["labels"] = nlohmann::json::object();
                             for (std::size_t i = 0; i < d.assets.size(); ++i)
                                 j["labels"][d.assets[i]] = clusters.labels[i];
                             j["total_cost"] = clusters.total_cost;
                             j["gap"]["curve"] = curve.gap;
                             j["gap"]["sk"] = curve.sk;
                             j["gap"]["log_w_real"] = curve.log_w_real;
                             j["gap"]["mean_log_w_ref"] = curve.mean_log_w_ref;
                             os << j.dump(2) << "\n";
                         });

                    const Network net =
                        detail::run_stage("network:" + w + ":" + b, manifest.timings, [&] {
                            return build_network(bm, clusters, threshold_for(b), w);
                        });
                    emit(w, b, "network_dot", w + "__" + b + "__network.dot",
                         [&](std::ostream& os) { export_dot(net, os); });
                    emit(w, b, "network_json", w + "__" + b + "__network.json",
                         [&](std::ostream& os) { export_json(net, os); });
                    emit(w, b, "network_adjacency", w + "__" + b + "__network_adjacency.csv",
                         [&](std::ostream& os) {
                             export_adjacency(net, os, config.csv.delimiter);
                         });
                }
            }

            if (config.dump_power) {
                detail::run_stage("power-dump:" + w, manifest.timings, [&] {
                    for (std::size_t a = 0; a < panel.n_assets(); ++a) {
                        const auto field = cwt(panel.series(a), grid, config.morlet,
                                               config.threads);
                        RealMatrix power(field.coefficients.rows(), field.coefficients.cols());
                        for (std::size_t i = 0; i < power.size(); ++i)
                            power.data()[i] = std::norm(field.coefficients.data()[i]);
                        emit(w, "", "power", w + "__power__" + panel.assets[a] + ".csv",
                             [&](std::ostream& os) {
                                 write_field_csv(power, grid.scales, os, config.csv.delimiter);
                             });
                    }
                });
            }
        }

        // Manifest last; timing sidecar is diagnostic and not an artifact.
        manifest.manifest_path = config.output_dir / "manifest.json";
        {
            nlohmann::json j;
            j["schema"] = "wcnet.manifest/1";
            j["version"] = manifest.version;
            j["input_fingerprint"] = manifest.input_fingerprint;
            j["config"] = manifest.resolved_config;
            j["artifacts"] = nlohmann::json::array();
            for (const auto& a : manifest.artifacts)
                j["artifacts"].push_back(
                    {{"window", a.window}, {"band", a.band}, {"kind", a.kind}, {"path", a.path}});
            auto os = open_output(manifest.manifest_path);
            os << j.dump(2) << "\n";
        }
        {
            nlohmann::json j = nlohmann::json::array();
            for (const auto& t : manifest.timings)
                j.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
            auto os = open_output(config.output_dir / "timings.json");
            os << j.dump(2) << "\n";
        }
    } catch (...) {
        for (const auto& path : written) {
            std::error_code ec;
            std::filesystem::remove(path, ec);
        }
        throw;
    }
    return manifest;
}

}  // namespace wcnet
