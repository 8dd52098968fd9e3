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

#ifndef BEAMSIM_IEVD_HPP
#define BEAMSIM_IEVD_HPP

// Iterative-EVD joint beamforming.
//
// Given w_r, Gamma = w_t^H (sum_l Hhat_l^H w_r w_r^H Hhat_l) w_t, so the best w_t is
// the principal eigenvector of that matrix; symmetrically for w_r given w_t.
// Alternating the two updates never decreases Gamma.
//
// The training variant reaches the same fixed point over the air: each half
// iteration probes the reverse link with identity receive AWVs for n slots,
// accumulates R = sum_l r[l] r[l]^H and applies the power method R^K e_1.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "beamsim/channel.hpp"
#include "beamsim/errors.hpp"
#include "beamsim/linalg.hpp"
#include "beamsim/random.hpp"
#include "beamsim/solution.hpp"

namespace beamsim
{

enum class StoppingRule
{
    fixed_count, // run exactly max_iterations
    gain_ratio,  // stop once Gamma(n) / Gamma(n-1) < mu (checked from n = 2)
};

struct IevdConfig
{
    std::size_t max_iterations = 3;
    StoppingRule stopping_rule = StoppingRule::fixed_count;
    double ratio_threshold = 1.05;
    std::optional<ComplexVector> initial_receive_awv; // random when empty

    void validate(std::size_t n_r) const
    {
        if (max_iterations < 1)
            throw ContractViolation("IevdConfig: max_iterations must be >= 1");
        if (stopping_rule == StoppingRule::gain_ratio && !(ratio_threshold > 1.0))
            throw ContractViolation("IevdConfig: ratio threshold must exceed 1");
        if (initial_receive_awv)
        {
            if (initial_receive_awv->size() != n_r)
                throw ContractViolation("IevdConfig: initial receive AWV has the wrong length");
            if (std::abs(norm2(*initial_receive_awv) - 1.0) > 1e-10)
                throw ContractViolation("IevdConfig: initial receive AWV must have unit norm");
        }
    }
};

struct TrainingConfig
{
    IevdConfig ievd;
    std::size_t power = 2;       // K
    double noise_variance = 0.0; // per received sample
};

// Gamma = sum_l |w_r^H Hhat_l w_t|^2
inline double array_gain(const MultipathChannel &channel, std::span<const cplx> w_t, std::span<const cplx> w_r)
{
    check_awvs(channel, w_t, w_r);
    double gamma = 0.0;
    for (std::size_t l = 0; l < channel.num_paths(); ++l)
        gamma += std::norm(beamformed_path_gain(channel, l, w_t, w_r));
    return gamma;
}

namespace detail
{

inline bool should_stop(const IevdConfig &config, const std::vector<double> &trace)
{
    if (trace.size() >= config.max_iterations)
        return true;
    if (config.stopping_rule != StoppingRule::gain_ratio || trace.size() < 2)
        return false;
    const double prev = trace[trace.size() - 2];
    const double cur = trace.back();
    if (!(prev > 0.0))
        return false;
    return cur / prev < config.ratio_threshold;
}

inline ComplexVector initial_receive(const IevdConfig &config, std::size_t n_r, Rng &rng)
{
    return config.initial_receive_awv ? *config.initial_receive_awv : random_unit_vector(rng, n_r);
}

} // namespace detail

// Transmit update: principal eigenvector of sum_l Hhat_l^H w_r w_r^H Hhat_l.
// Hhat_l^H w_r = sqrt(n_r n_t) conj(lambda_l) (g_l^H w_r) h_l, so the matrix is the
// outer-product sum of those L columns.
inline ComplexVector ievd_transmit_update(const MultipathChannel &channel, std::span<const cplx> w_r)
{
    const std::size_t L = channel.num_paths();
    ComplexMatrix cols(channel.arrays().n_t, L);
    for (std::size_t l = 0; l < L; ++l)
    {
        const cplx c = channel.amplitude_scale() * std::conj(channel.paths()[l].lambda) *
                       inner(channel.rx_steering(l), w_r);
        const auto &h = channel.tx_steering(l);
        for (std::size_t i = 0; i < h.size(); ++i)
            cols(i, l) = c * h[i];
    }
    return principal_eigvec_of_outer_sum(cols);
}

// Receive update: principal eigenvector of sum_l Hhat_l w_t w_t^H Hhat_l^H
inline ComplexVector ievd_receive_update(const MultipathChannel &channel, std::span<const cplx> w_t)
{
    const std::size_t L = channel.num_paths();
    ComplexMatrix cols(channel.arrays().n_r, L);
    for (std::size_t l = 0; l < L; ++l)
    {
        const cplx c = channel.amplitude_scale() * channel.paths()[l].lambda * inner(channel.tx_steering(l), w_t);
        const auto &g = channel.rx_steering(l);
        for (std::size_t i = 0; i < g.size(); ++i)
            cols(i, l) = c * g[i];
    }
    return principal_eigvec_of_outer_sum(cols);
}

// Full-CSI alternating optimization. Eigenvectors are exact (Jacobi on the rank <= L
// accumulated matrix), which keeps the Gamma trace monotone to rounding.
inline BeamformingSolution ievd_beamform(const MultipathChannel &channel, const IevdConfig &config, Rng &rng)
{
    config.validate(channel.arrays().n_r);
    BeamformingSolution sol;
    sol.scheme = "ievd";
    sol.w_r = detail::initial_receive(config, channel.arrays().n_r, rng);
    for (;;)
    {
        sol.w_t = ievd_transmit_update(channel, sol.w_r);
        sol.w_r = ievd_receive_update(channel, sol.w_t);
        sol.gamma_trace.push_back(array_gain(channel, sol.w_t, sol.w_r));
        if (detail::should_stop(config, sol.gamma_trace))
            break;
    }
    sol.iterations_used = sol.gamma_trace.size();
    return sol;
}

// Over-the-air access to the channel for training. Every slot transmits one
// training sequence with a fixed AWV at one end and receives with one probe AWV at
// the other; because paths have distinct delays the receiver separates them, so a
// slot yields one sample per path. Slots are counted.
class TrainingLink
{
public:
    TrainingLink(const MultipathChannel &channel, double noise_variance, Rng &rng)
        : channel_(channel), noise_variance_(noise_variance), rng_(rng)
    {
        if (!(noise_variance >= 0.0))
            throw ContractViolation("TrainingLink: noise variance must be >= 0");
    }

    // Destination sends with w_r, source receives with `probe`:
    // r[l] = probe^H Hhat_l^H w_r (+ noise)
    ComplexVector receive_at_source(std::span<const cplx> w_r, std::span<const cplx> probe)
    {
        check_awvs(channel_, probe, w_r);
        ComplexVector r(channel_.num_paths());
        for (std::size_t l = 0; l < r.size(); ++l)
            r[l] = std::conj(beamformed_path_gain(channel_, l, probe, w_r)) + noise();
        ++slots_;
        return r;
    }

    // Source sends with w_t, destination receives with `probe`:
    // r[l] = probe^H Hhat_l w_t (+ noise)
    ComplexVector receive_at_destination(std::span<const cplx> w_t, std::span<const cplx> probe)
    {
        check_awvs(channel_, w_t, probe);
        ComplexVector r(channel_.num_paths());
        for (std::size_t l = 0; l < r.size(); ++l)
            r[l] = beamformed_path_gain(channel_, l, w_t, probe) + noise();
        ++slots_;
        return r;
    }

    std::size_t slots_used() const { return slots_; }
    std::size_t num_paths() const { return channel_.num_paths(); }
    const ArrayConfig &arrays() const { return channel_.arrays(); }

private:
    cplx noise() { return noise_variance_ > 0.0 ? complex_gaussian(rng_, noise_variance_) : cplx(0.0); }

    const MultipathChannel &channel_;
    double noise_variance_;
    Rng &rng_;
    std::size_t slots_ = 0;
};

namespace detail
{

// Scan the identity basis at the source: column l of the result is r[l] = Hhat_l^H w_r
inline ComplexMatrix scan_at_source(TrainingLink &link, std::span<const cplx> w_r)
{
    const std::size_t n = link.arrays().n_t;
    ComplexMatrix r(n, link.num_paths());
    for (std::size_t i = 0; i < n; ++i)
    {
        const auto samples = link.receive_at_source(w_r, basis_vector(n, i));
        for (std::size_t l = 0; l < samples.size(); ++l)
            r(i, l) = samples[l];
    }
    return r;
}

// Scan the identity basis at the destination: column l is rbar[l] = Hhat_l w_t
inline ComplexMatrix scan_at_destination(TrainingLink &link, std::span<const cplx> w_t)
{
    const std::size_t n = link.arrays().n_r;
    ComplexMatrix r(n, link.num_paths());
    for (std::size_t j = 0; j < n; ++j)
    {
        const auto samples = link.receive_at_destination(w_t, basis_vector(n, j));
        for (std::size_t l = 0; l < samples.size(); ++l)
            r(j, l) = samples[l];
    }
    return r;
}

inline ComplexMatrix outer_sum(const ComplexMatrix &columns)
{
    ComplexMatrix m(columns.rows(), columns.rows());
    for (std::size_t l = 0; l < columns.cols(); ++l)
        add_outer(m, columns.column(l));
    return m;
}

} // namespace detail

inline BeamformingSolution training_beamform(const MultipathChannel &channel, const TrainingConfig &config, Rng &rng)
{
    config.ievd.validate(channel.arrays().n_r);
    if (config.power < 1)
        throw ContractViolation("TrainingConfig: power K must be >= 1");

    BeamformingSolution sol;
    sol.scheme = "training";
    sol.w_r = detail::initial_receive(config.ievd, channel.arrays().n_r, rng);
    TrainingLink link(channel, config.noise_variance, rng);
    const auto e1_t = basis_vector(channel.arrays().n_t, 0);
    const auto e1_r = basis_vector(channel.arrays().n_r, 0);
    for (;;)
    {
        const auto rs = detail::outer_sum(detail::scan_at_source(link, sol.w_r));
        auto tx = principal_eigvec_power(rs, e1_t, config.power);
        sol.w_t = std::move(tx.vector);

        const auto rd = detail::outer_sum(detail::scan_at_destination(link, sol.w_t));
        auto rx = principal_eigvec_power(rd, e1_r, config.power);
        sol.w_r = std::move(rx.vector);

        sol.degenerate_seed = sol.degenerate_seed || tx.degenerate || rx.degenerate;
        // Gamma is evaluated on the true channel for reporting only
        sol.gamma_trace.push_back(array_gain(channel, sol.w_t, sol.w_r));
        if (detail::should_stop(config.ievd, sol.gamma_trace))
            break;
    }
    sol.iterations_used = sol.gamma_trace.size();
    sol.slots_consumed = link.slots_used();
    return sol;
}

struct SteeringEstimate
{
    ComplexVector h; // transmit steering estimate (unit norm; empty when unobservable)
    ComplexVector g; // receive steering estimate
    bool h_observable = false;
    bool g_observable = false;
};

// One training round with fixed probe AWVs. r[l] = Hhat_l^H w_r is a scaled h_l and
// rbar[l] = Hhat_l w_t a scaled g_l, so normalizing them recovers the steering
// vectors up to a phase. Paths whose measurement norm is below 1e-10 are flagged.
inline std::vector<SteeringEstimate> estimate_steering_vectors(const MultipathChannel &channel,
                                                               std::span<const cplx> probe_w_t,
                                                               std::span<const cplx> probe_w_r,
                                                               double noise_variance, Rng &rng)
{
    check_awvs(channel, probe_w_t, probe_w_r);
    TrainingLink link(channel, noise_variance, rng);
    const auto r = detail::scan_at_source(link, probe_w_r);
    const auto rbar = detail::scan_at_destination(link, probe_w_t);

    std::vector<SteeringEstimate> out(channel.num_paths());
    for (std::size_t l = 0; l < out.size(); ++l)
    {
        const auto rl = r.column(l);
        const auto rbl = rbar.column(l);
        if (norm2(rl) >= 1e-10)
        {
            out[l].h = canonical_phase(normalized(rl));
            out[l].h_observable = true;
        }
        if (norm2(rbl) >= 1e-10)
        {
            out[l].g = canonical_phase(normalized(rbl));
            out[l].g_observable = true;
        }
    }
    return out;
}

} // namespace beamsim

#endif
