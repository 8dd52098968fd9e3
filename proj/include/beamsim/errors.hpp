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

#ifndef BEAMSIM_ERRORS_HPP
#define BEAMSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace beamsim
{

// Caller broke a documented precondition (dimension mismatch, angle out of range, ...)
class ContractViolation : public std::invalid_argument
{
public:
    explicit ContractViolation(const std::string &what) : std::invalid_argument(what) {}
};

// Gram matrix too ill-conditioned to invert (reciprocal condition below the floor)
class RankDeficientError : public std::runtime_error
{
public:
    explicit RankDeficientError(const std::string &what) : std::runtime_error(what) {}
};

// A beamforming scheme has no AWV solution for this channel draw
class InfeasibleSchemeError : public std::runtime_error
{
public:
    explicit InfeasibleSchemeError(const std::string &what) : std::runtime_error(what) {}
};

// Sum of steering vectors in a group cancels (norm below 1e-12)
class DegenerateGroupError : public std::runtime_error
{
public:
    explicit DegenerateGroupError(const std::string &what) : std::runtime_error(what) {}
};

// Malformed experiment configuration
class ConfigError : public std::runtime_error
{
public:
    explicit ConfigError(const std::string &what) : std::runtime_error(what) {}
};

} // namespace beamsim

#endif
