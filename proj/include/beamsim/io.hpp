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

#ifndef BEAMSIM_IO_HPP
#define BEAMSIM_IO_HPP

// JSON forms of channels, solutions and group assignments.

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "beamsim/channel.hpp"
#include "beamsim/errors.hpp"
#include "beamsim/linalg.hpp"
#include "beamsim/solution.hpp"

namespace beamsim
{

using json = nlohmann::json;

namespace detail
{

// Rejects keys outside `allowed`, naming the offending key and the object
inline void check_keys(const json &j, std::initializer_list<const char *> allowed, const std::string &where)
{
    if (!j.is_object())
        throw ConfigError(where + ": expected a JSON object");
    for (const auto &[key, value] : j.items())
    {
        bool ok = false;
        for (const char *a : allowed)
            ok = ok || key == a;
        if (!ok)
            throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <class T> T get_required(const json &j, const char *key, const std::string &where)
{
    if (!j.contains(key))
        throw ConfigError(where + ": missing key '" + key + "'");
    try
    {
        return j.at(key).get<T>();
    }
    catch (const json::exception &e)
    {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <class T> T get_or(const json &j, const char *key, T fallback, const std::string &where)
{
    return j.contains(key) ? get_required<T>(j, key, where) : fallback;
}

} // namespace detail

inline json vector_to_json(std::span<const cplx> v)
{
    json re = json::array(), im = json::array();
    for (const auto &x : v)
    {
        re.push_back(x.real());
        im.push_back(x.imag());
    }
    return {{"re", re}, {"im", im}};
}

inline ComplexVector vector_from_json(const json &j, const std::string &where)
{
    detail::check_keys(j, {"re", "im"}, where);
    const auto re = detail::get_required<std::vector<double>>(j, "re", where);
    const auto im = detail::get_required<std::vector<double>>(j, "im", where);
    if (re.size() != im.size())
        throw ConfigError(where + ": re and im lengths differ");
    ComplexVector v(re.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = {re[i], im[i]};
    return v;
}

inline json channel_to_json(const MultipathChannel &channel)
{
    json paths = json::array();
    for (const auto &p : channel.paths())
        paths.push_back({{"omega_t", p.omega_t},
                         {"omega_r", p.omega_r},
                         {"lambda_re", p.lambda.real()},
                         {"lambda_im", p.lambda.imag()},
                         {"tau", p.tau}});
    return {{"n_t", channel.arrays().n_t}, {"n_r", channel.arrays().n_r}, {"paths", paths}};
}

inline MultipathChannel channel_from_json(const json &j)
{
    const std::string where = "channel";
    detail::check_keys(j, {"n_t", "n_r", "paths"}, where);
    ArrayConfig arrays{detail::get_required<std::size_t>(j, "n_t", where),
                       detail::get_required<std::size_t>(j, "n_r", where)};
    if (!j.contains("paths") || !j.at("paths").is_array())
        throw ConfigError(where + ": 'paths' must be an array");
    std::vector<PathComponent> paths;
    for (const auto &p : j.at("paths"))
    {
        const std::string pw = where + ".paths[" + std::to_string(paths.size()) + "]";
        detail::check_keys(p, {"omega_t", "omega_r", "lambda_re", "lambda_im", "tau"}, pw);
        PathComponent c;
        c.omega_t = detail::get_required<double>(p, "omega_t", pw);
        c.omega_r = detail::get_required<double>(p, "omega_r", pw);
        c.lambda = {detail::get_required<double>(p, "lambda_re", pw), detail::get_required<double>(p, "lambda_im", pw)};
        c.tau = detail::get_required<std::size_t>(p, "tau", pw);
        paths.push_back(c);
    }
    return MultipathChannel(arrays, std::move(paths));
}

inline json assignment_to_json(const GroupAssignment &g)
{
    json groups = json::object();
    for (const auto &[segment, members] : g.groups)
        groups[std::to_string(segment)] = members;
    return {{"segment_count", g.segment_count}, {"groups", groups}};
}

inline json solution_to_json(const BeamformingSolution &sol)
{
    json j = {{"scheme", sol.scheme},
              {"w_t", vector_to_json(sol.w_t)},
              {"w_r", vector_to_json(sol.w_r)},
              {"iterations_used", sol.iterations_used},
              {"gamma_trace", sol.gamma_trace},
              {"slots_consumed", sol.slots_consumed}};
    if (sol.degenerate_seed)
        j["degenerate_seed"] = true;
    if (sol.grouping)
        j["groups"] = {{"tx", assignment_to_json(sol.grouping->tx.assignment)},
                       {"rx", assignment_to_json(sol.grouping->rx.assignment)}};
    if (!sol.tx_selection.empty())
        j["selection"] = {{"tx", sol.tx_selection}, {"rx", sol.rx_selection}};
    return j;
}

} // namespace beamsim

#endif
