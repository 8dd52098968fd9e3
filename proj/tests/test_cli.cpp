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

// Drives the beamsim executable end to end.

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "beamsim/harness.hpp"

namespace fs = std::filesystem;

namespace
{

struct Result
{
    int code = -1;
    std::string out;
};

Result run_cli(const std::string &args)
{
    const std::string cmd = std::string(BEAMSIM_CLI_PATH) + " " + args + " 2>&1";
    Result r;
    FILE *pipe = ::popen(cmd.c_str(), "r");
    if (!pipe)
        return r;
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe))
        r.out += buf.data();
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path fresh_dir(const std::string &tag)
{
    auto dir = fs::temp_directory_path() / ("beamsim_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    return dir;
}

} // namespace

TEST(Cli, ListsPresets)
{
    const auto r = run_cli("presets");
    EXPECT_EQ(r.code, 0);
    for (const auto &n : beamsim::preset_names())
        EXPECT_NE(r.out.find(n), std::string::npos) << n;
}

TEST(Cli, ShowPresetIsALoadableConfig)
{
    const auto r = run_cli("show-preset fig6-analog");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(beamsim::config_from_json(beamsim::json::parse(r.out)) == beamsim::preset("fig6-analog"));
    EXPECT_EQ(run_cli("show-preset nope").code, 1);
}

TEST(Cli, OverheadRunWritesManifest)
{
    const auto dir = fresh_dir("overhead");
    const auto r = run_cli("overhead --preset overhead-table --seed 5 --out " + dir.string());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(dir / "overhead.csv"));
    const auto m = beamsim::json::parse(beamsim::read_file(dir / "manifest.json"));
    EXPECT_EQ(m["seed"], 5);
    EXPECT_NE(r.out.find(m["outputs"][0]["sha256"].get<std::string>()), std::string::npos);
    fs::remove_all(dir);
}

TEST(Cli, ConfigFileRunsAreReproducible)
{
    auto c = beamsim::preset("fig5-analog");
    c.scenario.path_counts = {1};
    c.schemes = {beamsim::SchemeKind::ievd};
    c.samples = 100;
    c.snr_db = {0.0, 10.0, 5.0};
    const auto dir = fresh_dir("cfg");
    fs::create_directories(dir);
    beamsim::write_file_atomic(dir / "c.json", beamsim::config_to_json(c).dump(2));
    const auto a = run_cli("pep --config " + (dir / "c.json").string() + " --seed 8 --threads 1 --out " +
                           (dir / "a").string());
    const auto b = run_cli("pep --config " + (dir / "c.json").string() + " --seed 8 --threads 3 --out " +
                           (dir / "b").string());
    ASSERT_EQ(a.code, 0) << a.out;
    ASSERT_EQ(b.code, 0) << b.out;
    const auto ma = beamsim::json::parse(beamsim::read_file(dir / "a" / "manifest.json"));
    const auto mb = beamsim::json::parse(beamsim::read_file(dir / "b" / "manifest.json"));
    EXPECT_EQ(ma["outputs"], mb["outputs"]);
    fs::remove_all(dir);
}

TEST(Cli, ExitCodes)
{
    const auto dir = fresh_dir("codes");
    // missing seed
    EXPECT_EQ(run_cli("overhead --preset overhead-table --out " + dir.string()).code, 1);
    // unknown preset
    EXPECT_EQ(run_cli("pep --preset nope --seed 1 --out " + dir.string()).code, 1);
    // preset for a different subcommand
    EXPECT_EQ(run_cli("bler --preset fig4-analog --seed 1 --out " + dir.string()).code, 1);
    // no subcommand
    EXPECT_EQ(run_cli("").code, 1);

    // unknown key in a config file
    fs::create_directories(dir);
    auto j = beamsim::config_to_json(beamsim::preset("fig4-analog"));
    j["colour"] = "blue";
    beamsim::write_file_atomic(dir / "bad.json", j.dump());
    const auto bad = run_cli("pep --config " + (dir / "bad.json").string() + " --seed 1 --out " + dir.string());
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.out.find("colour"), std::string::npos) << bad.out;

    // Park-Pan with more resolvable paths than antennas, abort policy
    auto c = beamsim::preset("fig5-analog");
    c.scenario.path_counts = {9};
    c.schemes = {beamsim::SchemeKind::parkpan};
    c.samples = 100;
    beamsim::write_file_atomic(dir / "inf.json", beamsim::config_to_json(c).dump());
    EXPECT_EQ(run_cli("pep --config " + (dir / "inf.json").string() + " --seed 1 --out " + dir.string()).code, 2);
    fs::remove_all(dir);
}
