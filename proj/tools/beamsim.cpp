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

// Command-line front end:
//
//   beamsim <converge|pep|bler|overhead> (--config FILE | --preset NAME) --seed U64 --out DIR
//           [--full-scale] [--threads N]
//   beamsim presets              list preset names
//   beamsim show-preset NAME     print a preset as a config file
//
// Exit codes: 0 success, 1 configuration error, 2 infeasible scheme.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "beamsim/harness.hpp"

namespace
{

struct RunArgs
{
    std::string config_file;
    std::string preset_name;
    std::uint64_t seed = 0;
    std::string out_dir;
    bool full_scale = false;
    std::size_t threads = 0;
};

void add_run_options(CLI::App *cmd, RunArgs &args)
{
    auto *cfg = cmd->add_option("--config", args.config_file, "Experiment config (JSON)");
    auto *pre = cmd->add_option("--preset", args.preset_name, "Named preset, see `beamsim presets`");
    cfg->excludes(pre);
    cmd->add_option("--seed", args.seed, "Master seed")->required();
    cmd->add_option("--out", args.out_dir, "Output directory")->required();
    cmd->add_flag("--full-scale", args.full_scale, "Use the full-scale sample counts");
    cmd->add_option("--threads", args.threads, "Worker threads (0 = hardware concurrency)");
}

int run(const std::string &command, const RunArgs &args)
{
    using namespace beamsim;
    ExperimentConfig config;
    if (!args.config_file.empty())
        config = load_config(args.config_file);
    else if (!args.preset_name.empty())
        config = preset(args.preset_name);
    else
        throw ConfigError("one of --config or --preset is required");
    if (experiment_name(config.experiment) != command)
        throw ConfigError("config describes a '" + experiment_name(config.experiment) + "' experiment, not '" +
                          command + "'");
    config.seed = args.seed;

    RunOptions options;
    options.out_dir = args.out_dir;
    options.full_scale = args.full_scale;
    options.threads = args.threads;
    const auto manifest = run_experiment(config, options);
    for (const auto &o : manifest["outputs"])
        std::cout << o["file"].get<std::string>() << "  " << o["sha256"].get<std::string>() << '\n';
    std::cout << "manifest.json written to " << args.out_dir << '\n';
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"beamsim: joint Tx/Rx beamforming simulation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", beamsim::version_string);

    RunArgs args;
    std::string command;
    for (const char *name : {"converge", "pep", "bler", "overhead"})
    {
        auto *cmd = app.add_subcommand(name, std::string("Run a ") + name + " experiment");
        add_run_options(cmd, args);
        cmd->callback([&command, name] { command = name; });
    }
    auto *list = app.add_subcommand("presets", "List preset names");
    std::string show_name;
    auto *show = app.add_subcommand("show-preset", "Print a preset as a config file");
    show->add_option("name", show_name, "Preset name")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try
    {
        if (list->parsed())
        {
            for (const auto &n : beamsim::preset_names())
                std::cout << n << '\n';
            return 0;
        }
        if (show->parsed())
        {
            std::cout << beamsim::config_to_json(beamsim::preset(show_name)).dump(2) << '\n';
            return 0;
        }
        return run(command, args);
    }
    catch (const beamsim::InfeasibleSchemeError &e)
    {
        std::cerr << "beamsim: infeasible scheme: " << e.what() << '\n';
        return 2;
    }
    catch (const beamsim::ConfigError &e)
    {
        std::cerr << "beamsim: " << e.what() << '\n';
        return 1;
    }
    catch (const beamsim::ContractViolation &e)
    {
        std::cerr << "beamsim: invalid input: " << e.what() << '\n';
        return 1;
    }
    catch (const std::exception &e)
    {
        std::cerr << "beamsim: error: " << e.what() << '\n';
        return 3;
    }
}
