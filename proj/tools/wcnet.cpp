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

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wcnet/pipeline.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config_error = 2;
constexpr int exit_data_error = 3;
constexpr int exit_internal_error = 4;

wcnet::FrequencyBand parse_band_spec(const std::string& spec) {
    // label:s_lo:s_hi, with s_hi empty or "inf" for an unbounded band
    const auto p1 = spec.find(':');
    const auto p2 = spec.find(':', p1 == std::string::npos ? p1 : p1 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos)
        throw wcnet::ConfigError("band spec must be label:s_lo:s_hi, got '" + spec + "'");
    wcnet::FrequencyBand band;
    band.label = spec.substr(0, p1);
    band.s_lo = std::stod(spec.substr(p1 + 1, p2 - p1 - 1));
    const std::string hi = spec.substr(p2 + 1);
    band.s_hi = (hi.empty() || hi == "inf") ? std::numeric_limits<double>::infinity()
                                            : std::stod(hi);
    return band;
}

wcnet::SubPeriod parse_subperiod_spec(const std::string& spec, const std::string& date_format) {
    // label:start:end with dates in the configured input format
    const auto p1 = spec.find(':');
    const auto p2 = spec.find(':', p1 == std::string::npos ? p1 : p1 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos)
        throw wcnet::ConfigError("sub-period spec must be label:start:end, got '" + spec + "'");
    wcnet::SubPeriod period;
    period.label = spec.substr(0, p1);
    period.start = wcnet::Date::parse(spec.substr(p1 + 1, p2 - p1 - 1), date_format);
    period.end = wcnet::Date::parse(spec.substr(p2 + 1), date_format);
    return period;
}

struct CliOverrides {
    std::optional<std::string> input, date_column, date_format, delimiter;
    std::optional<std::string> coi_policy, gap_mode, output_dir;
    std::optional<double> return_scale, dt, s0, s_max, omega0;
    std::optional<double> time_sigma_factor, time_truncate_sigmas, scale_octaves;
    std::optional<double> threshold_quantile, fixed_threshold;
    std::optional<int> voices, k_max, num_refs, threshold_reps;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    bool no_clustering = false;
    bool no_fixed_threshold = false;
    bool dump_power = false;
    bool no_subperiods = false;
    std::vector<std::string> bands;
    std::vector<std::string> subperiods;
};

void apply_overrides(wcnet::PipelineConfig& cfg, const CliOverrides& o) {
    if (o.input) cfg.input = *o.input;
    if (o.delimiter) {
        if (o.delimiter->size() != 1)
            throw wcnet::ConfigError("--delimiter must be a single character");
        cfg.csv.delimiter = (*o.delimiter)[0];
    }
    if (o.date_column) cfg.csv.date_column = *o.date_column;
    if (o.date_format) cfg.csv.date_format = *o.date_format;
    if (o.return_scale) cfg.return_scale = *o.return_scale;
    if (o.dt) cfg.dt = *o.dt;
    if (o.s0) cfg.grid.s0 = *o.s0;
    if (o.s_max) cfg.grid.s_max = *o.s_max;
    if (o.voices) cfg.grid.voices_per_octave = *o.voices;
    if (o.omega0) cfg.morlet.omega0 = *o.omega0;
    if (o.time_sigma_factor) cfg.smoothing.time_sigma_factor = *o.time_sigma_factor;
    if (o.time_truncate_sigmas) cfg.smoothing.time_truncate_sigmas = *o.time_truncate_sigmas;
    if (o.scale_octaves) cfg.smoothing.scale_octaves = *o.scale_octaves;
    if (o.coi_policy) {
        if (*o.coi_policy == "include")
            cfg.coi_policy = wcnet::CoiPolicy::include;
        else if (*o.coi_policy == "exclude")
            cfg.coi_policy = wcnet::CoiPolicy::exclude;
        else
            throw wcnet::ConfigError("--coi-policy must be include or exclude");
    }
    if (o.k_max) cfg.gap.k_max = *o.k_max;
    if (o.num_refs) cfg.gap.num_refs = *o.num_refs;
    if (o.gap_mode) {
        if (*o.gap_mode == "full")
            cfg.gap.reference_mode = wcnet::ReferenceMode::full_pipeline;
        else if (*o.gap_mode == "cheap")
            cfg.gap.reference_mode = wcnet::ReferenceMode::uniform_dissim;
        else
            throw wcnet::ConfigError("--gap-mode must be full or cheap");
    }
    if (o.no_clustering) cfg.clustering_enabled = false;
    if (o.threshold_reps) cfg.threshold.reps = *o.threshold_reps;
    if (o.threshold_quantile) cfg.threshold.quantile = *o.threshold_quantile;
    if (o.fixed_threshold) cfg.threshold.fixed = *o.fixed_threshold;
    if (o.no_fixed_threshold) cfg.threshold.fixed.reset();
    if (o.seed) cfg.seed = *o.seed;
    if (o.output_dir) cfg.output_dir = *o.output_dir;
    if (o.threads) cfg.threads = *o.threads;
    if (o.dump_power) cfg.dump_power = true;
    if (o.no_subperiods) cfg.subperiods.clear();
    if (!o.bands.empty()) {
        cfg.bands.clear();
        for (const auto& spec : o.bands) cfg.bands.push_back(parse_band_spec(spec));
    }
    if (!o.subperiods.empty()) {
        cfg.subperiods.clear();
        for (const auto& spec : o.subperiods)
            cfg.subperiods.push_back(parse_subperiod_spec(spec, "%Y-%m-%d"));
    }
}

wcnet::ReturnPanel load_panel(const wcnet::PipelineConfig& cfg) {
    auto table = wcnet::align_and_clean(wcnet::load_price_table(cfg.input, cfg.csv));
    auto panel = wcnet::log_returns(table, cfg.return_scale);
    panel.dt = cfg.dt;
    return panel;
}

int cmd_run(const wcnet::PipelineConfig& cfg) {
    const auto manifest = wcnet::run_pipeline(cfg);
    std::printf("input %s (fingerprint %s)\n", cfg.input.string().c_str(),
                manifest.input_fingerprint.c_str());
    std::printf("wrote %zu artifacts under %s\n", manifest.artifacts.size(),
                cfg.output_dir.string().c_str());
    std::printf("manifest: %s\n", manifest.manifest_path.string().c_str());
    double total = 0.0;
    for (const auto& t : manifest.timings) total += t.seconds;
    std::printf("total stage time: %.1fs\n", total);
    return exit_ok;
}

int cmd_validate(const wcnet::PipelineConfig& cfg) {
    const auto diags = wcnet::validate_config(cfg);
    if (diags.empty()) {
        std::printf("config OK\n");
        return exit_ok;
    }
    for (const auto& d : diags) std::fprintf(stderr, "config: %s\n", d.c_str());
    return exit_config_error;
}

int cmd_stats(const wcnet::PipelineConfig& cfg) {
    const auto panel = load_panel(cfg);
    const auto stats = wcnet::descriptive_stats(panel);
    const auto corr = wcnet::pearson_matrix(panel);

    std::printf("%-12s %10s %10s %10s %10s %14s\n", "asset", "mean", "std", "skew", "kurt", "JB");
    for (const auto& row : stats.rows) {
        std::printf("%-12s %10.4f %10.4f %10.4f %10.4f %14.3f\n", row.asset.c_str(), row.mean,
                    row.stddev, row.skewness, row.kurtosis, row.jarque_bera);
    }

    std::filesystem::create_directories(cfg.output_dir);
    {
        auto os = wcnet::open_output(cfg.output_dir / "full__stats.csv");
        wcnet::write_stats_csv(stats, os, cfg.csv.delimiter);
    }
    {
        auto os = wcnet::open_output(cfg.output_dir / "full__pearson.csv");
        wcnet::write_matrix_csv(corr, panel.assets, os, cfg.csv.delimiter);
    }
    std::printf("wrote %s and %s\n", (cfg.output_dir / "full__stats.csv").string().c_str(),
                (cfg.output_dir / "full__pearson.csv").string().c_str());
    return exit_ok;
}

int cmd_threshold(const wcnet::PipelineConfig& cfg) {
    const auto panel = load_panel(cfg);
    const std::size_t n = panel.n_obs();
    const double s0 = cfg.grid.s0 > 0.0 ? cfg.grid.s0 : 2.0 * cfg.dt;
    const double s_max =
        cfg.grid.s_max > 0.0 ? cfg.grid.s_max : static_cast<double>(n) * cfg.dt / 5.0;
    const auto grid = wcnet::make_scale_grid(n, cfg.dt, cfg.grid.voices_per_octave, s0, s_max);
    wcnet::CoherenceOptions copts;
    copts.smoothing = cfg.smoothing;

    const auto est = wcnet::noise_threshold(
        wcnet::asset_variances(panel), n, grid, cfg.morlet, copts, cfg.bands, cfg.threshold.reps,
        cfg.threshold.quantile, wcnet::derive_seed(cfg.seed, "threshold", "full"), cfg.coi_policy,
        cfg.threads);

    std::printf("noise study: n=%zu, reps=%d, quantile=%.2f\n", n, est.reps, est.quantile);
    for (std::size_t b = 0; b < est.band_labels.size(); ++b)
        std::printf("  band %-12s threshold %.4f\n", est.band_labels[b].c_str(),
                    est.band_values[b]);
    std::printf("  max across bands: %.4f\n", est.value);

    std::filesystem::create_directories(cfg.output_dir);
    nlohmann::json j;
    j["schema"] = "wcnet.threshold/1";
    j["window"] = "full";
    j["fixed"] = nullptr;
    j["quantile"] = est.quantile;
    j["reps"] = est.reps;
    j["value"] = est.value;
    j["bands"] = nlohmann::json::object();
    for (std::size_t b = 0; b < est.band_labels.size(); ++b)
        j["bands"][est.band_labels[b]] = est.band_values[b];
    auto os = wcnet::open_output(cfg.output_dir / "full__threshold.json");
    os << j.dump(2) << "\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wavelet-coherence directed networks over time-series panels"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags override its values")
        ->check(CLI::ExistingFile);

    CliOverrides o;
    app.add_option("--input", o.input, "delimited price panel (header row, one date column)");
    app.add_option("--delimiter", o.delimiter, "field delimiter (default ,)");
    app.add_option("--date-column", o.date_column, "name of the date column (default Date)");
    app.add_option("--date-format", o.date_format, "date pattern, %Y %m %d (default %Y-%m-%d)");
    app.add_option("--return-scale", o.return_scale, "multiplier on log-returns (default 1)");
    app.add_option("--dt", o.dt, "sampling interval in days (default 1)");
    app.add_option("--s0", o.s0, "smallest scale in days (default 2*dt)");
    app.add_option("--s-max", o.s_max, "largest scale in days (default n*dt/5)");
    app.add_option("--voices", o.voices, "voices per octave (default 12)");
    app.add_option("--omega0", o.omega0, "Morlet center frequency (default 6)");
    app.add_option("--time-sigma-factor", o.time_sigma_factor,
                   "time smoothing std as a multiple of the scale (default 1.1)");
    app.add_option("--time-truncate-sigmas", o.time_truncate_sigmas,
                   "time kernel truncation in sigmas (default 3)");
    app.add_option("--scale-octaves", o.scale_octaves,
                   "scale smoothing width in octaves (default 0.6)");
    app.add_option("--coi-policy", o.coi_policy, "include|exclude cone-of-influence cells");
    app.add_option("--band", o.bands,
                   "band as label:s_lo:s_hi (repeatable; s_hi 'inf' for unbounded); replaces "
                   "the configured bands");
    app.add_option("--subperiod", o.subperiods,
                   "sub-period as label:YYYY-MM-DD:YYYY-MM-DD (repeatable); replaces the "
                   "configured sub-periods");
    app.add_flag("--no-subperiods", o.no_subperiods, "full sample only");
    app.add_option("--k-max", o.k_max, "largest cluster count for the Gap statistic (default 6)");
    app.add_option("--num-refs", o.num_refs, "Gap reference replicates (default 50)");
    app.add_option("--gap-mode", o.gap_mode,
                   "full = uniform panels through the wavelet pipeline, cheap = uniform "
                   "dissimilarities");
    app.add_flag("--no-clustering", o.no_clustering,
                 "skip clustering and networks; band matrices and thresholds still emitted");
    app.add_option("--threshold-reps", o.threshold_reps, "noise study repetitions (default 100)");
    app.add_option("--threshold-quantile", o.threshold_quantile,
                   "noise study quantile (default 0.95)");
    app.add_option("--fixed-threshold", o.fixed_threshold,
                   "fixed display threshold for networks (default 0.38)");
    app.add_flag("--no-fixed-threshold", o.no_fixed_threshold,
                 "estimate the threshold by Monte Carlo instead of the fixed value");
    app.add_option("--seed", o.seed, "master seed; stages derive child seeds (default 42)");
    app.add_option("--output-dir", o.output_dir,
                   "output directory (default out; env WCNET_OUTPUT_DIR overrides the config)");
    app.add_option("--threads", o.threads, "worker threads, 0 = hardware (default 0)");
    app.add_flag("--dump-power", o.dump_power, "also dump |W|^2 fields per asset (debug)");

    auto* run = app.add_subcommand("run", "run the full pipeline");
    auto* validate = app.add_subcommand("validate", "report config diagnostics and exit");
    auto* stats = app.add_subcommand("stats", "ingest and write descriptive stats + correlations");
    auto* threshold = app.add_subcommand("threshold", "Monte Carlo noise study only");
    for (auto* sub : {run, validate, stats, threshold}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config_error;
    }

    try {
        wcnet::PipelineConfig cfg;
        if (!config_path.empty()) cfg = wcnet::load_config(config_path);
        if (const char* env_out = std::getenv("WCNET_OUTPUT_DIR"); env_out && *env_out)
            cfg.output_dir = env_out;
        apply_overrides(cfg, o);

        if (validate->parsed()) return cmd_validate(cfg);

        // Everything else needs a runnable config up front.
        const auto diags = wcnet::validate_config(cfg);
        if (!diags.empty()) {
            for (const auto& d : diags) std::fprintf(stderr, "config: %s\n", d.c_str());
            return exit_config_error;
        }
        if (run->parsed()) return cmd_run(cfg);
        if (stats->parsed()) return cmd_stats(cfg);
        if (threshold->parsed()) return cmd_threshold(cfg);
        return exit_config_error;
    } catch (const wcnet::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config_error;
    } catch (const wcnet::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return exit_data_error;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return exit_internal_error;
    }
}
