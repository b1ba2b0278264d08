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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "wcnet/pipeline.hpp"

using namespace wcnet;
namespace fs = std::filesystem;

namespace {

// Synthetic 6-asset price panel with two co-moving groups, written as CSV.
fs::path write_synthetic_csv(const std::string& name, std::size_t n_days = 260,
                             std::uint64_t seed = 99) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const auto path = fs::temp_directory_path() / name;
    std::ofstream os(path);
    os << "Date,EQ1,EQ2,EQ3,FI1,FI2,FI3\n";
    std::vector<double> price(6, 100.0);
    int y = 2020, mo = 1, d = 1;
    for (std::size_t t = 0; t < n_days; ++t) {
        char date[48];
        std::snprintf(date, sizeof(date), "%04d-%02d-%02d", y, mo, d);
        if (++d > 28) {
            d = 1;
            if (++mo > 12) {
                mo = 1;
                ++y;
            }
        }
        const double f1 = 0.01 * g(rng);
        const double f2 = 0.004 * g(rng);
        os << date;
        for (std::size_t a = 0; a < 6; ++a) {
            const double idio = (a < 3 ? 0.004 : 0.002) * g(rng);
            price[a] *= std::exp((a < 3 ? f1 : f2) + idio);
            char cell[32];
            std::snprintf(cell, sizeof(cell), ",%.6f", price[a]);
            os << cell;
        }
        os << "\n";
    }
    return path;
}

PipelineConfig small_config(const fs::path& input, const fs::path& out_dir) {
    PipelineConfig cfg;
    cfg.input = input;
    cfg.output_dir = out_dir;
    cfg.subperiods = {{"late", Date::from_ymd(2020, 6, 1), Date::from_ymd(2020, 10, 28)}};
    cfg.gap.k_max = 3;
    cfg.gap.num_refs = 8;
    cfg.gap.reference_mode = ReferenceMode::uniform_dissim;
    cfg.threshold.fixed = 0.38;
    cfg.seed = 7;
    cfg.threads = 2;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::set<std::string> tree_listing(const fs::path& root) {
    std::set<std::string> names;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) names.insert(fs::relative(e.path(), root).string());
    return names;
}

}  // namespace

TEST_CASE("config json round-trip preserves every field") {
    PipelineConfig cfg;
    cfg.input = "somewhere/prices.csv";
    cfg.csv.delimiter = ';';
    cfg.return_scale = 100.0;
    cfg.grid.s0 = 4.0;
    cfg.grid.s_max = 64.0;
    cfg.grid.voices_per_octave = 8;
    cfg.morlet.omega0 = 5.5;
    cfg.smoothing.time_sigma_factor = 0.9;
    cfg.coi_policy = CoiPolicy::exclude;
    cfg.gap.reference_mode = ReferenceMode::uniform_dissim;
    cfg.clustering_enabled = false;
    cfg.threshold.fixed.reset();
    cfg.seed = 123456789;
    cfg.threads = 3;
    cfg.dump_power = true;

    const auto j = config_to_json(cfg);
    const auto back = config_from_json(j);
    CHECK(config_to_json(back) == j);
    CHECK(back.csv.delimiter == ';');
    CHECK(back.coi_policy == CoiPolicy::exclude);
    CHECK_FALSE(back.threshold.fixed.has_value());
    CHECK(std::isinf(back.bands.back().s_hi));
}

TEST_CASE("validate_config") {
    const auto input = write_synthetic_csv("wcnet_validate.csv");
    PipelineConfig cfg = small_config(input, fs::temp_directory_path() / "wcnet_validate_out");

    SUBCASE("known-good config has no diagnostics") {
        CHECK(validate_config(cfg).empty());
    }
    SUBCASE("reversed band is reported by name") {
        cfg.bands.push_back({"backwards", 22.0, 5.0});
        const auto diags = validate_config(cfg);
        REQUIRE(diags.size() == 1);
        CHECK(diags[0].find("backwards") != std::string::npos);
    }
    SUBCASE("k_max at or above the asset count is reported") {
        cfg.gap.k_max = 20;
        const auto diags = validate_config(cfg);
        REQUIRE(diags.size() == 1);
        CHECK(diags[0].find("k_max") != std::string::npos);
        CHECK(diags[0].find("6") != std::string::npos);  // the asset count
    }
    SUBCASE("missing input is reported") {
        cfg.input = "/does/not/exist.csv";
        CHECK_FALSE(validate_config(cfg).empty());
    }
    SUBCASE("several violations are all reported") {
        cfg.threshold.quantile = 1.5;
        cfg.gap.num_refs = 0;
        cfg.return_scale = -2.0;
        CHECK(validate_config(cfg).size() == 3);
    }
}

TEST_CASE("run_pipeline emits the full artifact tree") {
    const auto input = write_synthetic_csv("wcnet_run.csv");
    const auto out = fs::temp_directory_path() / "wcnet_run_out";
    fs::remove_all(out);
    auto cfg = small_config(input, out);

    const auto manifest = run_pipeline(cfg);

    // 2 windows x 3 bands
    std::size_t networks = 0;
    for (const auto& a : manifest.artifacts)
        if (a.kind == "network_dot") ++networks;
    CHECK(networks == 6);

    // every artifact listed in the manifest exists on disk
    for (const auto& a : manifest.artifacts) CHECK(fs::exists(out / a.path));

    // naming convention <window>__<band>__<artifact>.<ext>
    CHECK(fs::exists(out / "full__stats.csv"));
    CHECK(fs::exists(out / "full__pearson.csv"));
    CHECK(fs::exists(out / "full__threshold.json"));
    CHECK(fs::exists(out / "late__short__network.dot"));
    CHECK(fs::exists(out / "late__medium__clusters.json"));
    CHECK(fs::exists(out / "full__long__coherence_mean.csv"));
    CHECK(fs::exists(out / "manifest.json"));

    // the manifest lists every emitted file except itself and the timing sidecar
    const auto manifest_json = nlohmann::json::parse(slurp(out / "manifest.json"));
    std::set<std::string> listed;
    for (const auto& a : manifest_json.at("artifacts")) listed.insert(a.at("path"));
    for (const auto& name : tree_listing(out)) {
        if (name == "manifest.json" || name == "timings.json") continue;
        CHECK(listed.count(name) == 1);
    }
    CHECK(manifest_json.at("input_fingerprint").get<std::string>().size() == 16);
}

TEST_CASE("zero sub-periods reduce to full-sample networks only") {
    const auto input = write_synthetic_csv("wcnet_nosub.csv");
    const auto out = fs::temp_directory_path() / "wcnet_nosub_out";
    fs::remove_all(out);
    auto cfg = small_config(input, out);
    cfg.subperiods.clear();

    const auto manifest = run_pipeline(cfg);
    std::size_t networks = 0;
    for (const auto& a : manifest.artifacts)
        if (a.kind == "network_dot") ++networks;
    CHECK(networks == 3);  // one per band
}

TEST_CASE("disabling clustering still emits band matrices and thresholds") {
    const auto input = write_synthetic_csv("wcnet_noclust.csv");
    const auto out = fs::temp_directory_path() / "wcnet_noclust_out";
    fs::remove_all(out);
    auto cfg = small_config(input, out);
    cfg.clustering_enabled = false;

    const auto manifest = run_pipeline(cfg);
    bool has_band_matrix = false, has_threshold = false, has_network = false;
    for (const auto& a : manifest.artifacts) {
        if (a.kind == "coherence_mean") has_band_matrix = true;
        if (a.kind == "threshold") has_threshold = true;
        if (a.kind == "network_dot") has_network = true;
    }
    CHECK(has_band_matrix);
    CHECK(has_threshold);
    CHECK_FALSE(has_network);
}

TEST_CASE("two runs with the same seed are byte-identical") {
    const auto input = write_synthetic_csv("wcnet_det.csv");
    const auto out_a = fs::temp_directory_path() / "wcnet_det_a";
    const auto out_b = fs::temp_directory_path() / "wcnet_det_b";
    fs::remove_all(out_a);
    fs::remove_all(out_b);

    auto cfg_a = small_config(input, out_a);
    auto cfg_b = small_config(input, out_b);
    cfg_b.threads = 1;  // thread count must not affect the results
    // estimated thresholds exercise the Monte Carlo path too
    cfg_a.threshold.fixed.reset();
    cfg_b.threshold.fixed.reset();
    cfg_a.threshold.reps = 5;
    cfg_b.threshold.reps = 5;

    run_pipeline(cfg_a);
    run_pipeline(cfg_b);

    auto names_a = tree_listing(out_a);
    auto names_b = tree_listing(out_b);
    CHECK(names_a == names_b);
    for (const auto& name : names_a) {
        if (name == "timings.json") continue;   // wall-clock diagnostic sidecar
        if (name == "manifest.json") continue;  // differs in output_dir/threads only
        CHECK_MESSAGE(slurp(out_a / name) == slurp(out_b / name), "file differs: ", name);
    }

    // manifests agree once the deliberately different settings are masked
    auto ja = nlohmann::json::parse(slurp(out_a / "manifest.json"));
    auto jb = nlohmann::json::parse(slurp(out_b / "manifest.json"));
    ja["config"]["output_dir"] = "";
    jb["config"]["output_dir"] = "";
    ja["config"]["threads"] = 0;
    jb["config"]["threads"] = 0;
    CHECK(ja == jb);
}

TEST_CASE("a failing stage removes partial artifacts and names the stage") {
    const auto input = write_synthetic_csv("wcnet_fail.csv");
    const auto out = fs::temp_directory_path() / "wcnet_fail_out";
    fs::remove_all(out);
    auto cfg = small_config(input, out);
    // slice outside the data range fails after ingest
    cfg.subperiods = {{"nowhere", Date::from_ymd(1980, 1, 1), Date::from_ymd(1980, 6, 1)}};

    try {
        run_pipeline(cfg);
        FAIL("expected a DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("slice:nowhere") != std::string::npos);
    }
    CHECK_FALSE(fs::exists(out / "manifest.json"));
    std::size_t leftover = 0;
    if (fs::exists(out))
        for (const auto& e : fs::recursive_directory_iterator(out))
            if (e.is_regular_file()) ++leftover;
    CHECK(leftover == 0);
}

TEST_CASE("run_pipeline rejects an invalid config up front") {
    PipelineConfig cfg;
    cfg.input = "/does/not/exist.csv";
    CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);
}

TEST_CASE("load_config merges file values over defaults") {
    const auto path = fs::temp_directory_path() / "wcnet_cfg.json";
    {
        std::ofstream os(path);
        os << R"({"seed": 99, "gap": {"k_max": 3}, "threshold": {"fixed": null}})";
    }
    const auto cfg = load_config(path);
    CHECK(cfg.seed == 99);
    CHECK(cfg.gap.k_max == 3);
    CHECK_FALSE(cfg.threshold.fixed.has_value());
    CHECK(cfg.grid.voices_per_octave == 12);  // default retained
    CHECK(cfg.bands.size() == 3);             // default bands retained
    CHECK(cfg.smoothing.time_sigma_factor == 1.1);

    CHECK_THROWS_AS(load_config("/missing/config.json"), ConfigError);
    const auto bad = fs::temp_directory_path() / "wcnet_bad.json";
    {
        std::ofstream os(bad);
        os << "{not json";
    }
    CHECK_THROWS_AS(load_config(bad), ConfigError);
}
