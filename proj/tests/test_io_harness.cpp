// SPDX-License-Identifier: Apache-2.0
//
// beamsim: joint Tx/Rx beamforming simulation for multipath mmWave channels
// Copyright (C) 2026 The beamsim authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <sstream>
#include <string>

#include <unistd.h>

#include <gtest/gtest.h>

#include "beamsim/harness.hpp"
#include "beamsim/io.hpp"
#include "generators.hpp"

using namespace beamsim;
namespace fs = std::filesystem;

namespace
{

fs::path fresh_dir(const std::string &tag)
{
    static std::atomic<int> counter{0};
    auto dir = fs::temp_directory_path() / ("beamsim_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter++));
    fs::remove_all(dir);
    return dir;
}

std::vector<std::string> lines_of(const std::string &text)
{
    std::vector<std::string> out;
    std::istringstream is(text);
    for (std::string line; std::getline(is, line);)
        out.push_back(line);
    return out;
}

ExperimentConfig small_pep()
{
    auto c = preset("fig5-analog");
    c.scenario.path_counts = {2};
    c.schemes = {SchemeKind::ievd, SchemeKind::parkpan};
    c.snr_db = {0.0, 10.0, 5.0};
    c.samples = 200;
    c.seed = 99;
    return c;
}

} // namespace

// ---------- JSON round trips ----------

TEST(ConfigJson, RoundTripsEveryPreset)
{
    for (const auto &name : preset_names())
    {
        auto c = preset(name);
        c.seed = 12345;
        const auto back = config_from_json(config_to_json(c));
        EXPECT_TRUE(back == c) << name;
        EXPECT_EQ(config_to_json(back).dump(), config_to_json(c).dump()) << name;
    }
}

TEST(ConfigJson, RoundTripsOptionalFields)
{
    auto c = preset("fig6-analog");
    c.scenario.path_counts = {2};
    c.scenario.angle_mode = AngleMode::fixed_list;
    c.scenario.fixed_angles = {{0.1, -0.3}, {0.5, 0.25}};
    c.scenario.coefficient_variance = 0.75;
    c.scheme_params.grouping = GroupingMethod::bartlett;
    c.scheme_params.stopping_rule = StoppingRule::gain_ratio;
    c.pep_estimator = PepEstimator::instantaneous;
    EXPECT_TRUE(config_from_json(config_to_json(c)) == c);
}

TEST(ConfigJson, MissingKeysTakeDefaults)
{
    const auto c = config_from_json(json{{"schema_version", 1}, {"experiment", "pep"}});
    ExperimentConfig d;
    EXPECT_TRUE(c == d);
}

TEST(ConfigJson, RejectsUnknownKeysAtEveryLevel)
{
    const auto base = config_to_json(preset("fig4-analog"));
    for (const char *obj : {"", "scenario", "scheme_params", "snr_db", "link", "converge", "overhead"})
    {
        auto j = base;
        if (*obj)
            j[obj]["bogus"] = 1;
        else
            j["bogus"] = 1;
        try
        {
            config_from_json(j);
            ADD_FAILURE() << "accepted an unknown key in '" << obj << "'";
        }
        catch (const ConfigError &e)
        {
            EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos) << e.what();
        }
    }
}

TEST(ConfigJson, SchemaVersionIsRequiredAndChecked)
{
    auto j = config_to_json(preset("fig4-analog"));
    j.erase("schema_version");
    EXPECT_THROW(config_from_json(j), ConfigError);
    j["schema_version"] = 2;
    EXPECT_THROW(config_from_json(j), ConfigError);
}

TEST(ConfigJson, RejectsBadValues)
{
    const auto base = config_to_json(preset("fig4-analog"));
    auto j = base;
    j["experiment"] = "nonsense";
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base;
    j["samples"] = "many";
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base;
    j["samples"] = 10; // below the PEP minimum
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base;
    j["snr_db"]["step"] = 0.0;
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base;
    j["schemes"] = json::array({"ievd", "magic"});
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base;
    j["scenario"]["paths"] = json::array();
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base;
    j["d"] = -1.0;
    EXPECT_THROW(config_from_json(j), ConfigError);
}

TEST(ConfigJson, LoadConfigReportsMissingAndMalformedFiles)
{
    const auto dir = fresh_dir("load");
    fs::create_directories(dir);
    EXPECT_THROW(load_config(dir / "absent.json"), ConfigError);
    write_file_atomic(dir / "bad.json", "{ not json");
    EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
    auto c = preset("fig9-analog");
    write_file_atomic(dir / "ok.json", config_to_json(c).dump(2));
    EXPECT_TRUE(load_config(dir / "ok.json") == c);
    fs::remove_all(dir);
}

TEST(ChannelJson, RoundTrip)
{
    Rng rng(5);
    for (std::size_t L : {1u, 3u, 7u})
    {
        const auto ch = gen::channel(rng, 8, 4, L, AngleMode::uniform);
        // dump/parse to exercise the text form, not only the in-memory tree
        const auto back = channel_from_json(json::parse(channel_to_json(ch).dump()));
        EXPECT_TRUE(back == ch);
    }
}

TEST(ChannelJson, RejectsMalformed)
{
    Rng rng(6);
    auto j = channel_to_json(gen::channel(rng, 4, 4, 2, AngleMode::uniform));
    auto bad = j;
    bad["paths"][0]["extra"] = 0;
    EXPECT_THROW(channel_from_json(bad), ConfigError);
    bad = j;
    bad["paths"][1]["tau"] = 0; // duplicate delay
    EXPECT_THROW(channel_from_json(bad), ContractViolation);
    bad = j;
    bad.erase("n_r");
    EXPECT_THROW(channel_from_json(bad), ConfigError);
}

TEST(VectorJson, RoundTripAndLengthCheck)
{
    const ComplexVector v{{1.0, -2.0}, {0.5, 0.25}, {-3.0, 0.0}};
    EXPECT_EQ(vector_from_json(json::parse(vector_to_json(v).dump()), "v"), v);
    EXPECT_THROW(vector_from_json(json{{"re", {1.0}}, {"im", {1.0, 2.0}}}, "v"), ConfigError);
}

TEST(SolutionJson, CarriesAwvsAndGroups)
{
    Rng rng(8);
    const auto ch = gen::channel(rng, 8, 8, 4, AngleMode::deterministic);
    SchemeSpec spec;
    spec.kind = SchemeKind::mpg;
    const auto sol = run_scheme(spec, ch, rng);
    const auto j = json::parse(solution_to_json(sol).dump());
    EXPECT_EQ(j.at("scheme"), "mpg");
    EXPECT_EQ(vector_from_json(j.at("w_t"), "w_t"), sol.w_t);
    EXPECT_EQ(vector_from_json(j.at("w_r"), "w_r"), sol.w_r);
    ASSERT_TRUE(j.contains("groups"));
    EXPECT_EQ(j["groups"]["tx"]["segment_count"], 8);
}

// ---------- presets ----------

TEST(Presets, AllNamesResolveAndValidate)
{
    const auto names = preset_names();
    for (const char *expected : {"fig3-analog", "fig4-analog", "fig5-analog", "fig6-analog", "fig7-analog",
                                 "fig8-analog", "fig9-analog", "fig10-analog", "overhead-table"})
        EXPECT_NE(std::find(names.begin(), names.end(), expected), names.end()) << expected;
    for (const auto &n : names)
    {
        const auto c = preset(n);
        EXPECT_EQ(c.name, n);
        EXPECT_NO_THROW(c.validate()) << n;
        EXPECT_FALSE(c.seed.has_value()) << n;
    }
}

TEST(Presets, UnknownNameIsConfigError) { EXPECT_THROW(preset("fig11-analog"), ConfigError); }

TEST(Presets, ExperimentKinds)
{
    EXPECT_EQ(preset("fig3-analog").experiment, ExperimentKind::converge);
    for (const char *n : {"fig4-analog", "fig5-analog", "fig6-analog", "fig7-analog", "fig8-analog"})
        EXPECT_EQ(preset(n).experiment, ExperimentKind::pep) << n;
    EXPECT_EQ(preset("fig9-analog").experiment, ExperimentKind::bler);
    EXPECT_EQ(preset("fig10-analog").experiment, ExperimentKind::bler);
    EXPECT_EQ(preset("overhead-table").experiment, ExperimentKind::overhead);
    EXPECT_EQ(preset("fig4-analog").scenario.transmit_angle_mode, TransmitAngleMode::same_single);
    EXPECT_EQ(preset("fig7-analog").scenario.path_counts, (std::vector<std::size_t>{10, 20}));
}

// ---------- output helpers ----------

TEST(Sha256, KnownDigests)
{
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Seed, RequiredForEveryStudy)
{
    auto c = preset("overhead-table");
    EXPECT_THROW(require_seed(c), ConfigError);
    EXPECT_THROW(overhead_study(c), ConfigError);
    const auto dir = fresh_dir("noseed");
    EXPECT_THROW(run_experiment(c, {dir, 1, false}), ConfigError);
    EXPECT_FALSE(fs::exists(dir / "manifest.json"));
    c.seed = 0;
    EXPECT_EQ(require_seed(c), 0u);
}

TEST(EffectiveSamples, FullScaleSwitch)
{
    const auto c = preset("fig9-analog");
    EXPECT_EQ(effective_samples(c, {".", 1, false}), 10000u);
    EXPECT_EQ(effective_samples(c, {".", 1, true}), 10000000u);
}

// ---------- studies ----------

TEST(OverheadStudy, MeasuredSlotsMatchProtocolCount)
{
    auto c = preset("overhead-table");
    c.seed = 3;
    const auto rows = overhead_study(c);
    ASSERT_EQ(rows.size(), c.overhead.arrays.size());
    for (const auto &r : rows)
    {
        EXPECT_EQ(r.nsenga_slots, r.arrays.n_t * r.arrays.n_r);
        EXPECT_EQ(r.ievd_training_slots, c.overhead.iterations * (r.arrays.n_t + r.arrays.n_r));
    }
    auto find = [&](std::size_t n) {
        return *std::find_if(rows.begin(), rows.end(),
                             [&](const OverheadRow &r) { return r.arrays.n_t == n && r.arrays.n_r == n; });
    };
    EXPECT_EQ(find(8).nsenga_slots, 64u);
    EXPECT_EQ(find(8).ievd_training_slots, 32u);
    EXPECT_EQ(find(16).nsenga_slots, 256u);
    EXPECT_EQ(find(16).ievd_training_slots, 64u);
}

TEST(OverheadStudy, ScalesWithIterations)
{
    auto c = preset("overhead-table");
    c.seed = 3;
    c.overhead.arrays = {{8, 8}};
    c.overhead.iterations = 5;
    EXPECT_EQ(overhead_study(c).front().ievd_training_slots, 80u);
}

TEST(ConvergeStudy, RowsStartTogetherAndStayBounded)
{
    auto c = preset("fig3-analog");
    c.seed = 17;
    const std::size_t channels = 200;
    const auto rows = converge_study(c, channels, 1);
    const std::size_t E = c.converge.iterations;
    ASSERT_EQ(rows.size(), c.scenario.path_counts.size() * c.converge.powers.size() * (E + 1));
    for (const auto &r : rows)
    {
        if (r.iteration == 0)
        {
            EXPECT_EQ(r.ievd_mean_gamma, r.training_mean_gamma);
        }
        // Gamma <= n_t n_r sum |lambda|^2 with E sum |lambda|^2 = 1; 3x leaves room for sampling
        EXPECT_LT(r.ievd_mean_gamma, 3.0 * 64.0);
        EXPECT_GT(r.ievd_mean_gamma, 0.0);
    }
    // single path: the first IEVD iteration is already optimal
    for (const auto &r : rows)
        if (r.L == 1 && r.iteration >= 1)
        {
            const auto &first = *std::find_if(rows.begin(), rows.end(), [&](const ConvergeRow &x) {
                return x.L == 1 && x.K == r.K && x.iteration == 1;
            });
            EXPECT_NEAR(r.ievd_mean_gamma, first.ievd_mean_gamma, 1e-9 * first.ievd_mean_gamma);
        }
}

TEST(ConvergeStudy, IevdMeanNonDecreasing)
{
    auto c = preset("fig3-analog");
    c.seed = 23;
    c.scenario.path_counts = {4};
    c.converge.powers = {1};
    const auto rows = converge_study(c, 300, 1);
    for (std::size_t i = 1; i < rows.size(); ++i)
        EXPECT_GE(rows[i].ievd_mean_gamma, rows[i - 1].ievd_mean_gamma * (1.0 - 1e-12));
}

// ---------- run_experiment ----------

TEST(RunExperiment, PepWritesCurvesDiversityAndManifest)
{
    const auto c = small_pep();
    const auto dir = fresh_dir("pep");
    const auto m = run_experiment(c, {dir, 1, false});
    for (const char *f : {"pep_L2_ievd.csv", "pep_L2_parkpan.csv", "diversity.csv", "manifest.json"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const auto pep_lines = lines_of(read_file(dir / "pep_L2_ievd.csv"));
    ASSERT_EQ(pep_lines.size(), 4u);
    EXPECT_EQ(pep_lines[0], "snr_db,pep_mean,pep_stderr,samples");
    const auto div_lines = lines_of(read_file(dir / "diversity.csv"));
    ASSERT_EQ(div_lines.size(), 3u);
    EXPECT_EQ(div_lines[0], "L,scheme,slope,fit_db_min,fit_db_max,points,r_squared");

    const auto on_disk = json::parse(read_file(dir / "manifest.json"));
    EXPECT_EQ(on_disk, m);
    EXPECT_EQ(m["tool"], "beamsim");
    EXPECT_EQ(m["experiment"], "pep");
    EXPECT_EQ(m["seed"], 99);
    EXPECT_EQ(m["samples"], 200);
    EXPECT_EQ(m["full_scale"], false);
    EXPECT_TRUE(config_from_json(m["config"]) == c);
    ASSERT_EQ(m["outputs"].size(), 3u);
    for (const auto &o : m["outputs"])
        EXPECT_EQ(o["sha256"], sha256_hex(read_file(dir / o["file"].get<std::string>())));
    for (const auto &entry : fs::directory_iterator(dir))
        EXPECT_NE(entry.path().extension(), ".tmp");
    fs::remove_all(dir);
}

TEST(RunExperiment, ChecksumsReproduceAcrossRunsAndThreads)
{
    const auto c = small_pep();
    const auto a = fresh_dir("rep_a"), b = fresh_dir("rep_b"), d = fresh_dir("rep_c");
    const auto ma = run_experiment(c, {a, 1, false});
    const auto mb = run_experiment(c, {b, 1, false});
    const auto md = run_experiment(c, {d, 4, false});
    EXPECT_EQ(ma["outputs"], mb["outputs"]);
    EXPECT_EQ(ma["outputs"], md["outputs"]);
    auto other = c;
    other.seed = 100;
    const auto e = fresh_dir("rep_d");
    EXPECT_NE(run_experiment(other, {e, 1, false})["outputs"], ma["outputs"]);
    for (const auto &p : {a, b, d, e})
        fs::remove_all(p);
}

TEST(RunExperiment, BlerFilesAndLayout)
{
    auto c = preset("fig9-analog");
    c.scenario.path_counts = {1};
    c.schemes = {SchemeKind::ievd};
    c.snr_db = {0.0, 6.0, 3.0};
    c.samples = 50;
    c.seed = 4;
    const auto dir = fresh_dir("bler");
    const auto m = run_experiment(c, {dir, 2, false});
    const auto lines = lines_of(read_file(dir / "bler_L1_ievd.csv"));
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0], "snr_db,bler,blocks,stderr");
    EXPECT_EQ(m["outputs"].size(), 1u);
    fs::remove_all(dir);
}

TEST(RunExperiment, ConvergeAndOverheadFiles)
{
    auto c = preset("fig3-analog");
    c.samples = 20;
    c.seed = 1;
    const auto dir = fresh_dir("conv");
    run_experiment(c, {dir, 1, false});
    const auto lines = lines_of(read_file(dir / "converge.csv"));
    EXPECT_EQ(lines[0], "L,K,iteration,ievd_mean_gamma,training_mean_gamma,channels");
    EXPECT_EQ(lines.size(), 1u + 3 * 3 * 6);

    auto o = preset("overhead-table");
    o.seed = 1;
    run_experiment(o, {dir, 1, false});
    const auto ol = lines_of(read_file(dir / "overhead.csv"));
    ASSERT_GE(ol.size(), 3u);
    EXPECT_EQ(ol[0], "n_t,n_r,nsenga_slots,ievd_training_slots");
    EXPECT_EQ(ol[2], "8,8,64,32");
    fs::remove_all(dir);
}

TEST(RunExperiment, InfeasibleAbortPropagates)
{
    auto c = small_pep();
    c.scenario.path_counts = {9};
    c.scenario.angle_mode = AngleMode::deterministic;
    c.schemes = {SchemeKind::parkpan};
    c.infeasible_draws = InfeasibleDrawPolicy::abort;
    const auto dir = fresh_dir("infeasible");
    EXPECT_THROW(run_experiment(c, {dir, 1, false}), InfeasibleSchemeError);
    EXPECT_FALSE(fs::exists(dir / "manifest.json"));
    fs::remove_all(dir);
}
