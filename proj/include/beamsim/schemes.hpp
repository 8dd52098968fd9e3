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

#ifndef BEAMSIM_SCHEMES_HPP
#define BEAMSIM_SCHEMES_HPP

// Uniform entry point over the beamforming schemes, used by the Monte Carlo drivers.

#include <string>
#include <string_view>

#include "beamsim/channel.hpp"
#include "beamsim/errors.hpp"
#include "beamsim/grouped.hpp"
#include "beamsim/ievd.hpp"
#include "beamsim/random.hpp"
#include "beamsim/solution.hpp"

namespace beamsim
{

enum class SchemeKind
{
    ievd,
    training,
    parkpan,
    parkpan_star,
    mpg,
};

inline std::string scheme_name(SchemeKind kind)
{
    switch (kind)
    {
    case SchemeKind::ievd:
        return "ievd";
    case SchemeKind::training:
        return "training";
    case SchemeKind::parkpan:
        return "parkpan";
    case SchemeKind::parkpan_star:
        return "parkpan_star";
    case SchemeKind::mpg:
        return "mpg";
    }
    return "unknown";
}

inline SchemeKind parse_scheme_kind(std::string_view name)
{
    for (auto k : {SchemeKind::ievd, SchemeKind::training, SchemeKind::parkpan, SchemeKind::parkpan_star,
                   SchemeKind::mpg})
        if (scheme_name(k) == name)
            return k;
    throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

struct SchemeSpec
{
    SchemeKind kind = SchemeKind::ievd;
    TrainingConfig training; // training.ievd also configures the full-CSI IEVD scheme
    GroupingMethod grouping = GroupingMethod::angle;

    std::string name() const { return scheme_name(kind); }

    // True when the AWVs depend on the path coefficients only through their
    // direction (common scaling leaves them unchanged)
    bool scale_invariant() const { return !(kind == SchemeKind::training && training.noise_variance > 0.0); }
};

// rng feeds the scheme's own randomness (IEVD initial w_r, training noise, Park-Pan* selection)
inline BeamformingSolution run_scheme(const SchemeSpec &spec, const MultipathChannel &channel, Rng &rng)
{
    switch (spec.kind)
    {
    case SchemeKind::ievd:
        return ievd_beamform(channel, spec.training.ievd, rng);
    case SchemeKind::training:
        return training_beamform(channel, spec.training, rng);
    case SchemeKind::parkpan:
        return parkpan_beamform(steering_set(channel), GainVectors::all_ones(channel.num_paths()));
    case SchemeKind::parkpan_star:
        return parkpan_star_beamform(steering_set(channel), GainVectors::all_ones(channel.num_paths()), rng);
    case SchemeKind::mpg:
        return mpg_beamform(steering_set(channel), channel.arrays(), spec.grouping);
    }
    throw ContractViolation("run_scheme: unknown scheme kind");
}

enum class InfeasibleDrawPolicy
{
    abort,  // rethrow with the trial index
    redraw, // draw a fresh channel from the same trial stream (bounded), counting redraws
};

inline constexpr std::size_t max_redraws_per_trial = 100;

struct TrialDraw
{
    MultipathChannel channel;
    BeamformingSolution solution;
    std::size_t redraws = 0;
};

// One Monte Carlo draw: channel, then scheme. `label` names the draw in diagnostics.
inline TrialDraw draw_trial(const ChannelEnsembleConfig &scenario, const SchemeSpec &spec, Rng &channel_rng,
                            Rng &scheme_rng, InfeasibleDrawPolicy policy, const std::string &label)
{
    for (std::size_t redraws = 0;; ++redraws)
    {
        auto channel = sample_channel(scenario, channel_rng);
        try
        {
            auto sol = run_scheme(spec, channel, scheme_rng);
            return {std::move(channel), std::move(sol), redraws};
        }
        catch (const InfeasibleSchemeError &e)
        {
            if (policy == InfeasibleDrawPolicy::abort || redraws + 1 >= max_redraws_per_trial)
                throw InfeasibleSchemeError(spec.name() + " infeasible on " + label + ": " + e.what());
        }
    }
}

} // namespace beamsim

#endif
