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

#ifndef BEAMSIM_CHANNEL_HPP
#define BEAMSIM_CHANNEL_HPP

// Frequency-selective steering channel for half-wave spaced ULAs:
//
//   H[k] = sqrt(n_r n_t) * sum_l g_l lambda_l h_l^H delta[k - tau_l]
//
// with g_l, h_l unit-norm steering vectors at cosine angles Omega_r, Omega_t.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "beamsim/errors.hpp"
#include "beamsim/linalg.hpp"
#include "beamsim/random.hpp"

namespace beamsim
{

struct ArrayConfig
{
    std::size_t n_t = 8;
    std::size_t n_r = 8;

    bool operator==(const ArrayConfig &) const = default;
};

struct PathComponent
{
    double omega_t = 0.0; // cosine transmit angle, [-1, 1)
    double omega_r = 0.0; // cosine receive angle, [-1, 1)
    cplx lambda = 0.0;    // fading coefficient
    std::size_t tau = 0;  // delay in symbols

    bool operator==(const PathComponent &) const = default;
};

inline bool valid_cosine_angle(double omega)
{
    return std::isfinite(omega) && omega >= -1.0 && omega < 1.0;
}

// Omega = cos(phi) for a physical angle phi in radians
inline double cosine_angle(double phi) { return std::cos(phi); }

// (1/sqrt(n)) [exp(j pi k omega)]_{k=0..n-1}
inline ComplexVector steering_vector(std::size_t n, double omega)
{
    if (n < 1)
        throw ContractViolation("steering_vector: antenna count must be >= 1");
    if (!valid_cosine_angle(omega))
        throw ContractViolation("steering_vector: cosine angle " + std::to_string(omega) + " outside [-1, 1)");
    ComplexVector v(n);
    const double amp = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k)
        v[k] = std::polar(amp, std::numbers::pi * static_cast<double>(k) * omega);
    return v;
}

class MultipathChannel
{
public:
    MultipathChannel(ArrayConfig arrays, std::vector<PathComponent> paths)
        : arrays_(arrays), paths_(std::move(paths))
    {
        if (arrays_.n_t < 1 || arrays_.n_r < 1)
            throw ContractViolation("MultipathChannel: antenna counts must be >= 1");
        if (paths_.empty())
            throw ContractViolation("MultipathChannel: at least one path required");
        std::set<std::size_t> delays;
        for (std::size_t l = 0; l < paths_.size(); ++l)
        {
            const auto &p = paths_[l];
            if (!valid_cosine_angle(p.omega_t) || !valid_cosine_angle(p.omega_r))
                throw ContractViolation("MultipathChannel: path " + std::to_string(l) + " angle outside [-1, 1)");
            if (!std::isfinite(p.lambda.real()) || !std::isfinite(p.lambda.imag()))
                throw ContractViolation("MultipathChannel: path " + std::to_string(l) + " has a non-finite coefficient");
            if (!delays.insert(p.tau).second)
                throw ContractViolation("MultipathChannel: duplicate delay " + std::to_string(p.tau) +
                                        " (paths must be resolvable)");
        }
        tx_.reserve(paths_.size());
        rx_.reserve(paths_.size());
        for (const auto &p : paths_)
        {
            tx_.push_back(steering_vector(arrays_.n_t, p.omega_t));
            rx_.push_back(steering_vector(arrays_.n_r, p.omega_r));
        }
    }

    const ArrayConfig &arrays() const { return arrays_; }
    const std::vector<PathComponent> &paths() const { return paths_; }
    std::size_t num_paths() const { return paths_.size(); }

    std::size_t max_delay() const
    {
        std::size_t v = 0;
        for (const auto &p : paths_)
            v = std::max(v, p.tau);
        return v;
    }

    // h_l and g_l
    const ComplexVector &tx_steering(std::size_t l) const { return tx_.at(l); }
    const ComplexVector &rx_steering(std::size_t l) const { return rx_.at(l); }

    double amplitude_scale() const { return std::sqrt(static_cast<double>(arrays_.n_t * arrays_.n_r)); }

    // Squared 2-norm of the coefficient vector, sum_l |lambda_l|^2
    double coefficient_energy() const
    {
        double s = 0.0;
        for (const auto &p : paths_)
            s += std::norm(p.lambda);
        return s;
    }

    bool operator==(const MultipathChannel &o) const { return arrays_ == o.arrays_ && paths_ == o.paths_; }

private:
    ArrayConfig arrays_;
    std::vector<PathComponent> paths_;
    std::vector<ComplexVector> tx_;
    std::vector<ComplexVector> rx_;
};

// sqrt(n_r n_t) lambda_l g_l h_l^H as an n_r x n_t matrix
inline ComplexMatrix path_matrix(const MultipathChannel &channel, std::size_t ell)
{
    if (ell >= channel.num_paths())
        throw ContractViolation("path_matrix: path index out of range");
    const auto &g = channel.rx_steering(ell);
    const auto &h = channel.tx_steering(ell);
    const cplx coef = channel.amplitude_scale() * channel.paths()[ell].lambda;
    ComplexMatrix m(g.size(), h.size());
    for (std::size_t r = 0; r < g.size(); ++r)
        for (std::size_t c = 0; c < h.size(); ++c)
            m(r, c) = coef * g[r] * std::conj(h[c]);
    return m;
}

inline void check_awvs(const MultipathChannel &channel, std::span<const cplx> w_t, std::span<const cplx> w_r)
{
    if (w_t.size() != channel.arrays().n_t || w_r.size() != channel.arrays().n_r)
        throw ContractViolation("AWV length does not match the array configuration");
}

// w_r^H Hhat_l w_t, evaluated through the rank-one factorization
inline cplx beamformed_path_gain(const MultipathChannel &channel, std::size_t ell, std::span<const cplx> w_t,
                                 std::span<const cplx> w_r)
{
    const cplx alpha = inner(w_r, channel.rx_steering(ell)); // w_r^H g_l
    const cplx beta = inner(channel.tx_steering(ell), w_t);  // h_l^H w_t
    return channel.amplitude_scale() * channel.paths()[ell].lambda * alpha * beta;
}

// Post-beamforming SISO tap sequence h[m], m = 0..max tau
struct SisoChannel
{
    ComplexVector taps;

    std::size_t order() const { return taps.empty() ? 0 : taps.size() - 1; }

    double energy() const
    {
        double s = 0.0;
        for (const auto &t : taps)
            s += std::norm(t);
        return s;
    }
};

inline SisoChannel siso_equivalent(const MultipathChannel &channel, std::span<const cplx> w_t,
                                   std::span<const cplx> w_r)
{
    check_awvs(channel, w_t, w_r);
    SisoChannel siso;
    siso.taps.assign(channel.max_delay() + 1, 0.0);
    for (std::size_t l = 0; l < channel.num_paths(); ++l)
        siso.taps[channel.paths()[l].tau] = beamformed_path_gain(channel, l, w_t, w_r);
    return siso;
}

// ---------- random ensembles ----------

enum class AngleMode
{
    deterministic, // Omega_l = -1 + 2 l / L, l = 0..L-1
    uniform,       // iid uniform on [-1, 1)
    fixed_list,    // user-supplied pairs
};

enum class TransmitAngleMode
{
    per_path,    // every path has its own transmit angle
    same_single, // all paths share the first path's transmit angle
};

struct ChannelEnsembleConfig
{
    ArrayConfig arrays;
    std::size_t num_paths = 1;
    AngleMode angle_mode = AngleMode::uniform;
    TransmitAngleMode transmit_angle_mode = TransmitAngleMode::per_path;
    std::optional<double> coefficient_variance;         // default 1/L
    std::vector<std::pair<double, double>> fixed_angles; // (omega_t, omega_r), fixed_list mode only
    std::vector<std::size_t> delays;                     // default tau_l = l

    double variance() const { return coefficient_variance.value_or(1.0 / static_cast<double>(num_paths)); }

    void validate() const
    {
        if (num_paths < 1)
            throw ContractViolation("ChannelEnsembleConfig: num_paths must be >= 1");
        if (arrays.n_t < 1 || arrays.n_r < 1)
            throw ContractViolation("ChannelEnsembleConfig: antenna counts must be >= 1");
        if (angle_mode == AngleMode::fixed_list)
        {
            if (fixed_angles.size() != num_paths)
                throw ContractViolation("ChannelEnsembleConfig: fixed_list needs exactly num_paths angle pairs");
            for (const auto &[t, r] : fixed_angles)
                if (!valid_cosine_angle(t) || !valid_cosine_angle(r))
                    throw ContractViolation("ChannelEnsembleConfig: fixed angle outside [-1, 1)");
        }
        if (!delays.empty() && delays.size() != num_paths)
            throw ContractViolation("ChannelEnsembleConfig: delays must list one value per path");
        if (coefficient_variance && !(*coefficient_variance > 0.0))
            throw ContractViolation("ChannelEnsembleConfig: coefficient variance must be positive");
    }
};

// Uniform on [-1, 1). generate_canonical may round up to exactly 1, so redraw then.
inline double uniform_cosine_angle(Rng &rng)
{
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (;;)
    {
        const double x = uni(rng);
        if (x < 1.0)
            return x;
    }
}

// Left-endpoint grid -1 + 2 l / L
inline double equally_spaced_angle(std::size_t l, std::size_t count)
{
    return -1.0 + 2.0 * static_cast<double>(l) / static_cast<double>(count);
}

inline MultipathChannel sample_channel(const ChannelEnsembleConfig &config, Rng &rng)
{
    config.validate();
    const std::size_t L = config.num_paths;
    std::vector<PathComponent> paths(L);

    for (std::size_t l = 0; l < L; ++l)
    {
        switch (config.angle_mode)
        {
        case AngleMode::deterministic:
            paths[l].omega_t = paths[l].omega_r = equally_spaced_angle(l, L);
            break;
        case AngleMode::uniform:
            paths[l].omega_t = uniform_cosine_angle(rng);
            paths[l].omega_r = uniform_cosine_angle(rng);
            break;
        case AngleMode::fixed_list:
            paths[l].omega_t = config.fixed_angles[l].first;
            paths[l].omega_r = config.fixed_angles[l].second;
            break;
        }
    }
    if (config.transmit_angle_mode == TransmitAngleMode::same_single)
        for (auto &p : paths)
            p.omega_t = paths.front().omega_t;

    const double var = config.variance();
    for (std::size_t l = 0; l < L; ++l)
    {
        paths[l].lambda = complex_gaussian(rng, var);
        paths[l].tau = config.delays.empty() ? l : config.delays[l];
    }
    return MultipathChannel(config.arrays, std::move(paths));
}

} // namespace beamsim

#endif
