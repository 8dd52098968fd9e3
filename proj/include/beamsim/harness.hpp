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

#ifndef BEAMSIM_HARNESS_HPP
#define BEAMSIM_HARNESS_HPP

// Experiment runner: JSON configs, named presets, and the converge / pep / bler /
// overhead studies. Every run writes CSV outputs and then manifest.json.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "beamsim/channel.hpp"
#include "beamsim/errors.hpp"
#include "beamsim/ievd.hpp"
#include "beamsim/io.hpp"
#include "beamsim/link_sim.hpp"
#include "beamsim/metrics.hpp"
#include "beamsim/parallel.hpp"
#include "beamsim/random.hpp"
#include "beamsim/schemes.hpp"
#include "beamsim/version.hpp"

namespace beamsim
{

inline constexpr int config_schema_version = 1;

enum class ExperimentKind
{
    converge,
    pep,
    bler,
    overhead,
};

struct ScenarioSpec
{
    ArrayConfig arrays;
    std::vector<std::size_t> path_counts{4}; // one study cell per L
    AngleMode angle_mode = AngleMode::uniform;
    TransmitAngleMode transmit_angle_mode = TransmitAngleMode::per_path;
    std::optional<double> coefficient_variance;
    std::vector<std::pair<double, double>> fixed_angles;

    ChannelEnsembleConfig ensemble(std::size_t L) const
    {
        ChannelEnsembleConfig c;
        c.arrays = arrays;
        c.num_paths = L;
        c.angle_mode = angle_mode;
        c.transmit_angle_mode = transmit_angle_mode;
        c.coefficient_variance = coefficient_variance;
        c.fixed_angles = fixed_angles;
        return c;
    }

    bool operator==(const ScenarioSpec &) const = default;
};

struct SchemeParams
{
    std::size_t iterations = 3; // epsilon
    StoppingRule stopping_rule = StoppingRule::fixed_count;
    double ratio_threshold = 1.05; // mu
    std::size_t power = 2;         // K
    double training_noise_variance = 0.0;
    GroupingMethod grouping = GroupingMethod::angle;

    SchemeSpec spec(SchemeKind kind) const
    {
        SchemeSpec s;
        s.kind = kind;
        s.training.ievd.max_iterations = iterations;
        s.training.ievd.stopping_rule = stopping_rule;
        s.training.ievd.ratio_threshold = ratio_threshold;
        s.training.power = power;
        s.training.noise_variance = training_noise_variance;
        s.grouping = grouping;
        return s;
    }

    bool operator==(const SchemeParams &) const = default;
};

struct SnrSpec
{
    double start_db = 0.0;
    double stop_db = 30.0;
    double step_db = 2.0;

    SnrGrid grid() const { return SnrGrid::db_range(start_db, stop_db, step_db); }

    bool operator==(const SnrSpec &) const = default;
};

struct LinkParams
{
    std::size_t block_size = 32;
    std::size_t zp_length = 8;
    std::size_t redraw_interval = 1;

    bool operator==(const LinkParams &) const = default;
};

struct ConvergeParams
{
    std::size_t iterations = 5;
    std::vector<std::size_t> powers{1, 2};

    bool operator==(const ConvergeParams &) const = default;
};

struct OverheadParams
{
    std::vector<ArrayConfig> arrays{{8, 8}, {16, 16}};
    std::size_t iterations = 2;

    bool operator==(const OverheadParams &) const = default;
};

struct ExperimentConfig
{
    int schema_version = config_schema_version;
    ExperimentKind experiment = ExperimentKind::pep;
    std::string name;
    ScenarioSpec scenario;
    std::vector<SchemeKind> schemes{SchemeKind::ievd};
    SchemeParams scheme_params;
    SnrSpec snr_db;
    std::size_t samples = 10000;            // PEP trials, converge channels, or BLER blocks
    std::size_t full_scale_samples = 100000; // used with --full-scale
    double d = std::numbers::sqrt2;
    PepEstimator pep_estimator = PepEstimator::radial_conditional;
    InfeasibleDrawPolicy infeasible_draws = InfeasibleDrawPolicy::abort;
    LinkParams link;
    ConvergeParams converge;
    OverheadParams overhead;
    std::optional<std::uint64_t> seed;

    bool operator==(const ExperimentConfig &) const = default;

    void validate() const
    {
        if (schema_version != config_schema_version)
            throw ConfigError("config: unsupported schema_version " + std::to_string(schema_version));
        if (experiment != ExperimentKind::overhead && schemes.empty())
            throw ConfigError("config: at least one scheme required");
        if (scenario.path_counts.empty())
            throw ConfigError("config: scenario.paths must list at least one path count");
        if (samples < 1 || full_scale_samples < 1)
            throw ConfigError("config: sample counts must be >= 1");
        try
        {
            for (auto L : scenario.path_counts)
                scenario.ensemble(L).validate();
            if (experiment == ExperimentKind::pep || experiment == ExperimentKind::bler)
                snr_db.grid();
            for (auto k : schemes)
                scheme_params.spec(k).training.ievd.validate(scenario.arrays.n_r);
        }
        catch (const ContractViolation &e)
        {
            throw ConfigError(std::string("config: ") + e.what());
        }
        if (scheme_params.power < 1)
            throw ConfigError("config: scheme_params.power must be >= 1");
        if (experiment == ExperimentKind::pep && samples < pep_min_samples)
            throw ConfigError("config: pep needs at least " + std::to_string(pep_min_samples) + " samples");
        if (experiment == ExperimentKind::converge && (converge.iterations < 1 || converge.powers.empty()))
            throw ConfigError("config: converge needs iterations >= 1 and at least one power");
        if (experiment == ExperimentKind::overhead && (overhead.arrays.empty() || overhead.iterations < 1))
            throw ConfigError("config: overhead needs at least one array size and iterations >= 1");
        if (!(d > 0.0))
            throw ConfigError("config: d must be positive");
    }
};

// ---------- enum <-> string ----------

namespace detail
{

template <class E> struct EnumName
{
    E value;
    const char *name;
};

inline constexpr EnumName<ExperimentKind> experiment_names[] = {{ExperimentKind::converge, "converge"},
                                                                {ExperimentKind::pep, "pep"},
                                                                {ExperimentKind::bler, "bler"},
                                                                {ExperimentKind::overhead, "overhead"}};
inline constexpr EnumName<AngleMode> angle_mode_names[] = {{AngleMode::deterministic, "deterministic"},
                                                           {AngleMode::uniform, "uniform"},
                                                           {AngleMode::fixed_list, "fixed_list"}};
inline constexpr EnumName<TransmitAngleMode> tx_mode_names[] = {{TransmitAngleMode::per_path, "per_path"},
                                                                {TransmitAngleMode::same_single, "same_single"}};
inline constexpr EnumName<StoppingRule> stopping_names[] = {{StoppingRule::fixed_count, "fixed_count"},
                                                            {StoppingRule::gain_ratio, "gain_ratio"}};
inline constexpr EnumName<GroupingMethod> grouping_names[] = {{GroupingMethod::angle, "angle"},
                                                              {GroupingMethod::bartlett, "bartlett"}};
inline constexpr EnumName<PepEstimator> estimator_names[] = {{PepEstimator::instantaneous, "instantaneous"},
                                                             {PepEstimator::radial_conditional, "radial_conditional"}};
inline constexpr EnumName<InfeasibleDrawPolicy> policy_names[] = {{InfeasibleDrawPolicy::abort, "abort"},
                                                                  {InfeasibleDrawPolicy::redraw, "redraw"}};

template <class E, std::size_t N> const char *enum_to_string(const EnumName<E> (&table)[N], E v)
{
    for (const auto &e : table)
        if (e.value == v)
            return e.name;
    return "?";
}

template <class E, std::size_t N>
E enum_from_json(const EnumName<E> (&table)[N], const json &j, const char *key, const std::string &where)
{
    const auto s = get_required<std::string>(j, key, where);
    for (const auto &e : table)
        if (s == e.name)
            return e.value;
    throw ConfigError(where + "." + key + ": unknown value '" + s + "'");
}

} // namespace detail

inline std::string experiment_name(ExperimentKind k) { return detail::enum_to_string(detail::experiment_names, k); }

inline ExperimentKind parse_experiment_kind(const std::string &s)
{
    return detail::enum_from_json(detail::experiment_names, json{{"experiment", s}}, "experiment", "command");
}

// ---------- config JSON ----------

inline json config_to_json(const ExperimentConfig &c)
{
    using namespace detail;
    json arrays = json::array();
    for (const auto &a : c.overhead.arrays)
        arrays.push_back({a.n_t, a.n_r});
    json schemes = json::array();
    for (auto k : c.schemes)
        schemes.push_back(scheme_name(k));
    json scenario = {{"n_t", c.scenario.arrays.n_t},
                     {"n_r", c.scenario.arrays.n_r},
                     {"paths", c.scenario.path_counts},
                     {"angle_mode", enum_to_string(angle_mode_names, c.scenario.angle_mode)},
                     {"transmit_angle_mode", enum_to_string(tx_mode_names, c.scenario.transmit_angle_mode)}};
    if (c.scenario.coefficient_variance)
        scenario["coefficient_variance"] = *c.scenario.coefficient_variance;
    if (!c.scenario.fixed_angles.empty())
    {
        json fa = json::array();
        for (const auto &[t, r] : c.scenario.fixed_angles)
            fa.push_back({t, r});
        scenario["fixed_angles"] = fa;
    }
    json j = {
        {"schema_version", c.schema_version},
        {"experiment", experiment_name(c.experiment)},
        {"name", c.name},
        {"scenario", scenario},
        {"schemes", schemes},
        {"scheme_params",
         {{"iterations", c.scheme_params.iterations},
          {"stopping_rule", enum_to_string(stopping_names, c.scheme_params.stopping_rule)},
          {"ratio_threshold", c.scheme_params.ratio_threshold},
          {"power", c.scheme_params.power},
          {"training_noise_variance", c.scheme_params.training_noise_variance},
          {"grouping", enum_to_string(grouping_names, c.scheme_params.grouping)}}},
        {"snr_db", {{"start", c.snr_db.start_db}, {"stop", c.snr_db.stop_db}, {"step", c.snr_db.step_db}}},
        {"samples", c.samples},
        {"full_scale_samples", c.full_scale_samples},
        {"d", c.d},
        {"pep_estimator", enum_to_string(estimator_names, c.pep_estimator)},
        {"infeasible_draws", enum_to_string(policy_names, c.infeasible_draws)},
        {"link",
         {{"block_size", c.link.block_size},
          {"zp_length", c.link.zp_length},
          {"redraw_interval", c.link.redraw_interval}}},
        {"converge", {{"iterations", c.converge.iterations}, {"powers", c.converge.powers}}},
        {"overhead", {{"arrays", arrays}, {"iterations", c.overhead.iterations}}},
    };
    if (c.seed)
        j["seed"] = *c.seed;
    return j;
}

// Missing keys take their defaults; unknown keys are rejected at every level.
inline ExperimentConfig config_from_json(const json &j)
{
    using namespace detail;
    const std::string w = "config";
    check_keys(j,
               {"schema_version", "experiment", "name", "scenario", "schemes", "scheme_params", "snr_db", "samples",
                "full_scale_samples", "d", "pep_estimator", "infeasible_draws", "link", "converge", "overhead", "seed"},
               w);
    ExperimentConfig c;
    c.schema_version = get_required<int>(j, "schema_version", w);
    c.experiment = enum_from_json(experiment_names, j, "experiment", w);
    c.name = get_or<std::string>(j, "name", c.name, w);

    if (j.contains("scenario"))
    {
        const auto &s = j.at("scenario");
        const std::string sw = w + ".scenario";
        check_keys(s, {"n_t", "n_r", "paths", "angle_mode", "transmit_angle_mode", "coefficient_variance",
                       "fixed_angles"},
                   sw);
        c.scenario.arrays.n_t = get_or<std::size_t>(s, "n_t", c.scenario.arrays.n_t, sw);
        c.scenario.arrays.n_r = get_or<std::size_t>(s, "n_r", c.scenario.arrays.n_r, sw);
        c.scenario.path_counts = get_or<std::vector<std::size_t>>(s, "paths", c.scenario.path_counts, sw);
        if (s.contains("angle_mode"))
            c.scenario.angle_mode = enum_from_json(angle_mode_names, s, "angle_mode", sw);
        if (s.contains("transmit_angle_mode"))
            c.scenario.transmit_angle_mode = enum_from_json(tx_mode_names, s, "transmit_angle_mode", sw);
        if (s.contains("coefficient_variance"))
            c.scenario.coefficient_variance = get_required<double>(s, "coefficient_variance", sw);
        if (s.contains("fixed_angles"))
            for (const auto &p : get_required<std::vector<std::vector<double>>>(s, "fixed_angles", sw))
            {
                if (p.size() != 2)
                    throw ConfigError(sw + ".fixed_angles: each entry must be [omega_t, omega_r]");
                c.scenario.fixed_angles.emplace_back(p[0], p[1]);
            }
    }
    if (j.contains("schemes"))
    {
        c.schemes.clear();
        for (const auto &s : get_required<std::vector<std::string>>(j, "schemes", w))
            c.schemes.push_back(parse_scheme_kind(s));
    }
    if (j.contains("scheme_params"))
    {
        const auto &p = j.at("scheme_params");
        const std::string pw = w + ".scheme_params";
        check_keys(p, {"iterations", "stopping_rule", "ratio_threshold", "power", "training_noise_variance", "grouping"},
                   pw);
        auto &sp = c.scheme_params;
        sp.iterations = get_or<std::size_t>(p, "iterations", sp.iterations, pw);
        if (p.contains("stopping_rule"))
            sp.stopping_rule = enum_from_json(stopping_names, p, "stopping_rule", pw);
        sp.ratio_threshold = get_or<double>(p, "ratio_threshold", sp.ratio_threshold, pw);
        sp.power = get_or<std::size_t>(p, "power", sp.power, pw);
        sp.training_noise_variance = get_or<double>(p, "training_noise_variance", sp.training_noise_variance, pw);
        if (p.contains("grouping"))
            sp.grouping = enum_from_json(grouping_names, p, "grouping", pw);
    }
    if (j.contains("snr_db"))
    {
        const auto &s = j.at("snr_db");
        const std::string sw = w + ".snr_db";
        check_keys(s, {"start", "stop", "step"}, sw);
        c.snr_db.start_db = get_or<double>(s, "start", c.snr_db.start_db, sw);
        c.snr_db.stop_db = get_or<double>(s, "stop", c.snr_db.stop_db, sw);
        c.snr_db.step_db = get_or<double>(s, "step", c.snr_db.step_db, sw);
    }
    c.samples = get_or<std::size_t>(j, "samples", c.samples, w);
    c.full_scale_samples = get_or<std::size_t>(j, "full_scale_samples", c.full_scale_samples, w);
    c.d = get_or<double>(j, "d", c.d, w);
    if (j.contains("pep_estimator"))
        c.pep_estimator = enum_from_json(estimator_names, j, "pep_estimator", w);
    if (j.contains("infeasible_draws"))
        c.infeasible_draws = enum_from_json(policy_names, j, "infeasible_draws", w);
    if (j.contains("link"))
    {
        const auto &l = j.at("link");
        const std::string lw = w + ".link";
        check_keys(l, {"block_size", "zp_length", "redraw_interval"}, lw);
        c.link.block_size = get_or<std::size_t>(l, "block_size", c.link.block_size, lw);
        c.link.zp_length = get_or<std::size_t>(l, "zp_length", c.link.zp_length, lw);
        c.link.redraw_interval = get_or<std::size_t>(l, "redraw_interval", c.link.redraw_interval, lw);
    }
    if (j.contains("converge"))
    {
        const auto &v = j.at("converge");
        const std::string vw = w + ".converge";
        check_keys(v, {"iterations", "powers"}, vw);
        c.converge.iterations = get_or<std::size_t>(v, "iterations", c.converge.iterations, vw);
        c.converge.powers = get_or<std::vector<std::size_t>>(v, "powers", c.converge.powers, vw);
    }
    if (j.contains("overhead"))
    {
        const auto &o = j.at("overhead");
        const std::string ow = w + ".overhead";
        check_keys(o, {"arrays", "iterations"}, ow);
        if (o.contains("arrays"))
        {
            c.overhead.arrays.clear();
            for (const auto &a : get_required<std::vector<std::vector<std::size_t>>>(o, "arrays", ow))
            {
                if (a.size() != 2)
                    throw ConfigError(ow + ".arrays: each entry must be [n_t, n_r]");
                c.overhead.arrays.push_back({a[0], a[1]});
            }
        }
        c.overhead.iterations = get_or<std::size_t>(o, "iterations", c.overhead.iterations, ow);
    }
    if (j.contains("seed"))
        c.seed = get_required<std::uint64_t>(j, "seed", w);
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    json j;
    try
    {
        j = json::parse(in);
    }
    catch (const json::parse_error &e)
    {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

// ---------- presets ----------

inline std::vector<std::string> preset_names()
{
    return {"fig3-analog", "fig4-analog", "fig5-analog", "fig6-analog", "fig7-analog",
            "fig8-analog", "fig9-analog", "fig10-analog", "overhead-table"};
}

// Desk-scale studies mirroring the published figures (QPSK, n_t = n_r = 8).
inline ExperimentConfig preset(const std::string &name)
{
    using K = SchemeKind;
    ExperimentConfig c;
    c.name = name;
    const std::vector<K> all_four{K::ievd, K::training, K::mpg, K::parkpan};
    const std::vector<K> massive{K::ievd, K::training, K::mpg, K::parkpan_star};

    auto pep = [&](std::vector<std::size_t> L, AngleMode mode, TransmitAngleMode tx, std::vector<K> schemes) {
        c.experiment = ExperimentKind::pep;
        c.scenario.path_counts = std::move(L);
        c.scenario.angle_mode = mode;
        c.scenario.transmit_angle_mode = tx;
        c.schemes = std::move(schemes);
        c.snr_db = {0.0, 30.0, 2.0};
        c.samples = 10000;
        c.full_scale_samples = 100000;
        c.pep_estimator = PepEstimator::radial_conditional;
        c.infeasible_draws = mode == AngleMode::uniform ? InfeasibleDrawPolicy::redraw : InfeasibleDrawPolicy::abort;
    };
    auto bler = [&](std::vector<std::size_t> L, AngleMode mode) {
        c.experiment = ExperimentKind::bler;
        c.scenario.path_counts = std::move(L);
        c.scenario.angle_mode = mode;
        c.schemes = all_four;
        c.snr_db = {0.0, 15.0, 3.0};
        c.samples = 10000;
        c.full_scale_samples = 10000000;
        c.infeasible_draws = mode == AngleMode::uniform ? InfeasibleDrawPolicy::redraw : InfeasibleDrawPolicy::abort;
    };

    if (name == "fig3-analog")
    {
        c.experiment = ExperimentKind::converge;
        c.scenario.path_counts = {1, 2, 4};
        c.scenario.angle_mode = AngleMode::uniform;
        c.schemes = {K::ievd, K::training};
        c.converge = {5, {1, 2, 4}};
        c.samples = 10000;
        c.full_scale_samples = 100000;
    }
    else if (name == "fig4-analog")
        pep({1, 2, 4, 8}, AngleMode::deterministic, TransmitAngleMode::same_single, all_four);
    else if (name == "fig5-analog")
        pep({1, 2, 4, 8}, AngleMode::deterministic, TransmitAngleMode::per_path, all_four);
    else if (name == "fig6-analog")
        pep({1, 2, 4, 8}, AngleMode::uniform, TransmitAngleMode::per_path, all_four);
    else if (name == "fig7-analog")
        pep({10, 20}, AngleMode::deterministic, TransmitAngleMode::per_path, massive);
    else if (name == "fig8-analog")
        pep({10, 20}, AngleMode::uniform, TransmitAngleMode::per_path, {K::ievd, K::mpg, K::parkpan_star});
    else if (name == "fig9-analog")
        bler({1, 2, 4, 8}, AngleMode::deterministic);
    else if (name == "fig10-analog")
        bler({4}, AngleMode::uniform);
    else if (name == "overhead-table")
    {
        c.experiment = ExperimentKind::overhead;
        c.scenario.path_counts = {4};
        c.schemes = {K::training};
        c.overhead = {{{4, 4}, {8, 8}, {16, 16}, {32, 32}, {8, 16}}, 2};
        c.samples = 1;
        c.full_scale_samples = 1;
    }
    else
        throw ConfigError("unknown preset '" + name + "'");
    c.validate();
    return c;
}

// ---------- output helpers ----------

inline std::string sha256_hex(const std::string &bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 computation failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return os.str();
}

inline std::string read_file(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Writes through a temporary file and a rename so readers never see a partial file
inline void write_file_atomic(const std::filesystem::path &path, const std::string &content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out)
            throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

struct RunOptions
{
    std::filesystem::path out_dir = ".";
    std::size_t threads = 0;
    bool full_scale = false;
};

class OutputSet
{
public:
    explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

    void write(const std::string &file, const std::string &content)
    {
        write_file_atomic(dir_ / file, content);
        files_.push_back(file);
    }

    json checksums() const
    {
        json out = json::array();
        for (const auto &f : files_)
            out.push_back({{"file", f}, {"sha256", sha256_hex(read_file(dir_ / f))}});
        return out;
    }

    const std::filesystem::path &dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

inline std::uint64_t require_seed(const ExperimentConfig &c)
{
    if (!c.seed)
        throw ConfigError("a seed is required (no wall-clock default)");
    return *c.seed;
}

inline std::size_t effective_samples(const ExperimentConfig &c, const RunOptions &o)
{
    return o.full_scale ? c.full_scale_samples : c.samples;
}

// ---------- studies ----------

struct ConvergeRow
{
    std::size_t L = 0;
    std::size_t K = 0;
    std::size_t iteration = 0;
    double ievd_mean_gamma = 0.0;
    double training_mean_gamma = 0.0;
};

// Mean Gamma after each iteration, iteration 0 being the random initial AWV pair.
// IEVD and training start from the same initial w_r on each channel.
inline std::vector<ConvergeRow> converge_study(const ExperimentConfig &c, std::size_t channels, std::size_t threads)
{
    const std::uint64_t seed = require_seed(c);
    const std::size_t E = c.converge.iterations;
    const std::size_t P = c.converge.powers.size();
    std::vector<ConvergeRow> rows;
    for (auto L : c.scenario.path_counts)
    {
        const auto ensemble = c.scenario.ensemble(L);
        // per channel: [gamma0, ievd(1..E), training_k(1..E) for each K]
        const std::size_t stride = 1 + E * (1 + P);
        std::vector<double> traces(channels * stride, 0.0);
        parallel_for(channels, threads, [&](std::size_t t) {
            Rng channel_rng = derive_stream(seed, t, StreamLane::channel);
            Rng scheme_rng = derive_stream(seed, t, StreamLane::scheme);
            Rng extra_rng = derive_stream(seed, t, StreamLane::data);
            const auto channel = sample_channel(ensemble, channel_rng);
            const auto w_r0 = random_unit_vector(scheme_rng, c.scenario.arrays.n_r);
            const auto w_t0 = random_unit_vector(extra_rng, c.scenario.arrays.n_t);
            double *row = &traces[t * stride];
            row[0] = array_gain(channel, w_t0, w_r0);

            TrainingConfig tc;
            tc.ievd.max_iterations = E;
            tc.ievd.stopping_rule = StoppingRule::fixed_count;
            tc.ievd.initial_receive_awv = w_r0;
            tc.noise_variance = c.scheme_params.training_noise_variance;
            const auto iv = ievd_beamform(channel, tc.ievd, scheme_rng);
            std::copy(iv.gamma_trace.begin(), iv.gamma_trace.end(), row + 1);
            for (std::size_t p = 0; p < P; ++p)
            {
                tc.power = c.converge.powers[p];
                Rng noise_rng = derive_stream(seed, t, StreamLane::scheme);
                const auto tr = training_beamform(channel, tc, noise_rng);
                std::copy(tr.gamma_trace.begin(), tr.gamma_trace.end(), row + 1 + E * (1 + p));
            }
        });
        for (std::size_t p = 0; p < P; ++p)
            for (std::size_t it = 0; it <= E; ++it)
            {
                ConvergeRow r{L, c.converge.powers[p], it, 0.0, 0.0};
                for (std::size_t t = 0; t < channels; ++t)
                {
                    const double *row = &traces[t * stride];
                    r.ievd_mean_gamma += it == 0 ? row[0] : row[it];
                    r.training_mean_gamma += it == 0 ? row[0] : row[E * (1 + p) + it];
                }
                r.ievd_mean_gamma /= static_cast<double>(channels);
                r.training_mean_gamma /= static_cast<double>(channels);
                rows.push_back(r);
            }
    }
    return rows;
}

struct PepCell
{
    std::size_t L = 0;
    PepCurve curve;
    std::optional<DiversityFit> fit;
    std::string fit_error;
};

inline std::vector<PepCell> pep_study(const ExperimentConfig &c, std::size_t samples, std::size_t threads)
{
    const std::uint64_t seed = require_seed(c);
    const auto grid = c.snr_db.grid();
    PepOptions opts{c.pep_estimator, threads, c.infeasible_draws};
    std::vector<PepCell> cells;
    for (auto L : c.scenario.path_counts)
        for (auto k : c.schemes)
        {
            PepCell cell;
            cell.L = L;
            cell.curve = pep_monte_carlo(c.scenario.ensemble(L), c.scheme_params.spec(k), grid, samples, c.d, seed, opts);
            try
            {
                cell.fit = diversity_fit(cell.curve);
            }
            catch (const ContractViolation &e)
            {
                cell.fit_error = e.what();
            }
            cells.push_back(std::move(cell));
        }
    return cells;
}

struct BlerCell
{
    std::size_t L = 0;
    BlerCurve curve;
};

inline std::vector<BlerCell> bler_study(const ExperimentConfig &c, std::size_t blocks, std::size_t threads)
{
    const std::uint64_t seed = require_seed(c);
    LinkSimConfig lc;
    lc.block_size = c.link.block_size;
    lc.zp_length = c.link.zp_length;
    lc.redraw_interval = c.link.redraw_interval;
    lc.blocks = blocks;
    lc.grid = c.snr_db.grid();
    lc.threads = threads;
    lc.infeasible = c.infeasible_draws;
    std::vector<BlerCell> cells;
    for (auto L : c.scenario.path_counts)
        for (auto k : c.schemes)
            cells.push_back({L, simulate_bler(c.scenario.ensemble(L), c.scheme_params.spec(k), lc, seed)});
    return cells;
}

struct OverheadRow
{
    ArrayConfig arrays;
    std::size_t nsenga_slots = 0;
    std::size_t ievd_training_slots = 0;
};

// Training slots measured from the protocol's counter; the baseline's n_r n_t
// training sequences are analytic.
inline std::vector<OverheadRow> overhead_study(const ExperimentConfig &c)
{
    const std::uint64_t seed = require_seed(c);
    std::vector<OverheadRow> rows;
    std::uint64_t index = 0;
    for (const auto &a : c.overhead.arrays)
    {
        auto scenario = c.scenario;
        scenario.arrays = a;
        auto ensemble = scenario.ensemble(scenario.path_counts.front());
        ensemble.fixed_angles.clear();
        if (ensemble.angle_mode == AngleMode::fixed_list)
            ensemble.angle_mode = AngleMode::uniform;
        Rng channel_rng = derive_stream(seed, index, StreamLane::channel);
        Rng scheme_rng = derive_stream(seed, index, StreamLane::scheme);
        ++index;
        const auto channel = sample_channel(ensemble, channel_rng);
        TrainingConfig tc;
        tc.ievd.max_iterations = c.overhead.iterations;
        tc.ievd.stopping_rule = StoppingRule::fixed_count;
        tc.power = c.scheme_params.power;
        const auto sol = training_beamform(channel, tc, scheme_rng);
        rows.push_back({a, a.n_t * a.n_r, sol.slots_consumed});
    }
    return rows;
}

// ---------- CSV ----------

inline std::string converge_csv(const std::vector<ConvergeRow> &rows, std::size_t channels)
{
    std::ostringstream os;
    os << "L,K,iteration,ievd_mean_gamma,training_mean_gamma,channels\n";
    for (const auto &r : rows)
        os << r.L << ',' << r.K << ',' << r.iteration << ',' << format_sci(r.ievd_mean_gamma) << ','
           << format_sci(r.training_mean_gamma) << ',' << channels << '\n';
    return os.str();
}

inline std::string diversity_csv(const std::vector<PepCell> &cells)
{
    std::ostringstream os;
    os << "L,scheme,slope,fit_db_min,fit_db_max,points,r_squared\n";
    for (const auto &c : cells)
    {
        os << c.L << ',' << c.curve.scheme << ',';
        if (c.fit)
            os << format_sci(c.fit->slope) << ',' << format_sci(c.fit->fit_db_min) << ','
               << format_sci(c.fit->fit_db_max) << ',' << c.fit->points << ',' << format_sci(c.fit->r_squared);
        else
            os << "nan,nan,nan,0,nan";
        os << '\n';
    }
    return os.str();
}

inline std::string overhead_csv(const std::vector<OverheadRow> &rows)
{
    std::ostringstream os;
    os << "n_t,n_r,nsenga_slots,ievd_training_slots\n";
    for (const auto &r : rows)
        os << r.arrays.n_t << ',' << r.arrays.n_r << ',' << r.nsenga_slots << ',' << r.ievd_training_slots << '\n';
    return os.str();
}

inline std::string pep_file_name(std::size_t L, const std::string &scheme)
{
    return "pep_L" + std::to_string(L) + "_" + scheme + ".csv";
}

inline std::string bler_file_name(std::size_t L, const std::string &scheme)
{
    return "bler_L" + std::to_string(L) + "_" + scheme + ".csv";
}

// ---------- top level ----------

// Runs the configured study, writes its CSV files and finally manifest.json into
// options.out_dir, and returns the manifest.
inline json run_experiment(const ExperimentConfig &config, const RunOptions &options)
{
    config.validate();
    const std::uint64_t seed = require_seed(config);
    const auto started = std::chrono::steady_clock::now();
    const std::size_t n = effective_samples(config, options);
    OutputSet out(options.out_dir);
    json details = json::object();

    switch (config.experiment)
    {
    case ExperimentKind::converge:
        out.write("converge.csv", converge_csv(converge_study(config, n, options.threads), n));
        break;
    case ExperimentKind::pep: {
        const auto cells = pep_study(config, n, options.threads);
        json redraws = json::object();
        for (const auto &c : cells)
        {
            std::ostringstream os;
            write_pep_csv(os, c.curve);
            const auto file = pep_file_name(c.L, c.curve.scheme);
            out.write(file, os.str());
            if (c.curve.redraws > 0)
                redraws[file] = c.curve.redraws;
            if (!c.fit_error.empty())
                details["diversity_errors"][file] = c.fit_error;
            else if (!c.fit->warnings.empty())
                details["diversity_warnings"][file] = c.fit->warnings;
        }
        out.write("diversity.csv", diversity_csv(cells));
        details["infeasible_redraws"] = redraws;
        break;
    }
    case ExperimentKind::bler: {
        const auto cells = bler_study(config, n, options.threads);
        json redraws = json::object();
        for (const auto &c : cells)
        {
            std::ostringstream os;
            write_bler_csv(os, c.curve);
            const auto file = bler_file_name(c.L, c.curve.scheme);
            out.write(file, os.str());
            if (c.curve.redraws > 0)
                redraws[file] = c.curve.redraws;
        }
        details["infeasible_redraws"] = redraws;
        break;
    }
    case ExperimentKind::overhead:
        out.write("overhead.csv", overhead_csv(overhead_study(config)));
        break;
    }

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json manifest = {{"tool", "beamsim"},
                     {"version", version_string},
                     {"experiment", experiment_name(config.experiment)},
                     {"config", config_to_json(config)},
                     {"seed", seed},
                     {"full_scale", options.full_scale},
                     {"samples", n},
                     {"outputs", out.checksums()},
                     {"details", details},
                     {"timing", {{"wall_seconds", seconds}, {"threads", resolve_threads(options.threads)}}}};
    write_file_atomic(out.dir() / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
}

} // namespace beamsim

#endif
