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

#ifndef BEAMSIM_RANDOM_HPP
#define BEAMSIM_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "beamsim/linalg.hpp"

namespace beamsim
{

using Rng = std::mt19937_64;

// Lanes separate the independent consumers inside one Monte Carlo trial so that
// schemes which draw nothing (Park-Pan, MPG) and schemes which do (IEVD) see the
// same channel and the same data/noise for a given (seed, trial).
enum class StreamLane : std::uint32_t
{
    channel = 0,
    scheme = 1,
    data = 2,
};

// Independent stream for trial `index` of a run with master seed `seed`.
// Depends only on its arguments, so any split of trials over workers reproduces
// a serial run exactly.
inline Rng derive_stream(std::uint64_t seed, std::uint64_t index, StreamLane lane = StreamLane::channel)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(lane)};
    return Rng(seq);
}

// Circularly-symmetric complex Gaussian with E|z|^2 = variance
inline cplx complex_gaussian(Rng &rng, double variance)
{
    std::normal_distribution<double> nd(0.0, std::sqrt(variance / 2.0));
    const double re = nd(rng);
    const double im = nd(rng);
    return {re, im};
}

// Uniformly distributed direction on the complex unit sphere
inline ComplexVector random_unit_vector(Rng &rng, std::size_t n)
{
    ComplexVector v(n);
    for (auto &x : v)
        x = complex_gaussian(rng, 1.0);
    return normalized(v);
}

} // namespace beamsim

#endif
