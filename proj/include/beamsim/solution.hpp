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

#ifndef BEAMSIM_SOLUTION_HPP
#define BEAMSIM_SOLUTION_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "beamsim/linalg.hpp"

namespace beamsim
{

// Partition of path indices into angle segments (segments are 1-indexed)
struct GroupAssignment
{
    std::size_t segment_count = 0;
    std::vector<std::size_t> segment_of_path;
    std::map<std::size_t, std::vector<std::size_t>> groups; // segment -> member paths, ascending

    std::size_t nonempty_count() const { return groups.size(); }

    bool operator==(const GroupAssignment &) const = default;
};

struct MultipathGroups
{
    GroupAssignment assignment;
    std::vector<ComplexVector> equivalent_vectors; // one per non-empty group, in segment order
};

// Grouping metadata attached to MPG solutions. Both rules are recorded when the
// steering angles are known, so callers can see whether grouping changed anything.
struct GroupingRecord
{
    MultipathGroups tx;
    MultipathGroups rx;
    std::optional<GroupAssignment> tx_by_angle;
    std::optional<GroupAssignment> rx_by_angle;
    GroupAssignment tx_by_bartlett;
    GroupAssignment rx_by_bartlett;
};

struct BeamformingSolution
{
    ComplexVector w_t;
    ComplexVector w_r;
    std::string scheme;
    std::size_t iterations_used = 0;
    std::vector<double> gamma_trace; // Gamma after each full iteration (IEVD / training)
    std::size_t slots_consumed = 0;  // training slots (training scheme only)
    bool degenerate_seed = false;    // a power-method fallback fired

    // Norms of the pre-normalization pseudo-inverse solutions (Park-Pan / MPG)
    double tx_scale = 0.0;
    double rx_scale = 0.0;

    std::optional<GroupingRecord> grouping;
    std::vector<std::size_t> tx_selection; // Park-Pan* path subsets
    std::vector<std::size_t> rx_selection;
};

} // namespace beamsim

#endif
