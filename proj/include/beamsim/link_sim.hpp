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

#ifndef BEAMSIM_LINK_SIM_HPP
#define BEAMSIM_LINK_SIM_HPP

// Block-error-rate simulation over the post-beamforming SISO channel:
// Gray QPSK, zero-padded single-carrier blocks, dense MMSE block equalization.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "beamsim/channel.hpp"
#include "beamsim/errors.hpp"
#include "beamsim/linalg.hpp"
#include "beamsim/metrics.hpp"
#include "beamsim/parallel.hpp"
#include "beamsim/random.hpp"
#include "beamsim/schemes.hpp"

namespace beamsim
{

using Bits = std::vector<std::uint8_t>;

// Bit pair (b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2); 00 -> (1 + j) / sqrt(2)
inline ComplexVector qpsk_modulate(std::span<const std::uint8_t> bits)
{
    if (bits.size() % 2 != 0)
        throw ContractViolation("qpsk_modulate: odd bit count");
    const double a = 1.0 / std::numbers::sqrt2;
    ComplexVector s(bits.size() / 2);
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = {bits[2 * i] ? -a : a, bits[2 * i + 1] ? -a : a};
    return s;
}

// Hard decision by quadrant
inline Bits qpsk_demodulate(std::span<const cplx> symbols)
{
    Bits bits(2 * symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i)
    {
        bits[2 * i] = symbols[i].real() < 0.0 ? 1 : 0;
        bits[2 * i + 1] = symbols[i].imag() < 0.0 ? 1 : 0;
    }
    return bits;
}

namespace detail
{

inline void check_guard(std::span<const cplx> taps, std::size_t zp_length)
{
    if (taps.empty())
        throw ContractViolation("ZP link: channel has no taps");
    if (taps.size() > zp_length + 1)
        throw ContractViolation("ZP link: channel order " + std::to_string(taps.size() - 1) +
                                " exceeds the zero-padding length " + std::to_string(zp_length));
}

} // namespace detail

// (P + zp) x P banded Toeplitz matrix of the taps
inline ComplexMatrix convolution_matrix(std::span<const cplx> taps, std::size_t block_size, std::size_t zp_length)
{
    detail::check_guard(taps, zp_length);
    ComplexMatrix h(block_size + zp_length, block_size);
    for (std::size_t c = 0; c < block_size; ++c)
        for (std::size_t m = 0; m < taps.size(); ++m)
            h(c + m, c) = taps[m];
    return h;
}

// [symbols; zeros(zp)] convolved with the taps, truncated to P + zp
inline ComplexVector zp_convolve(std::span<const cplx> taps, std::span<const cplx> symbols, std::size_t zp_length)
{
    detail::check_guard(taps, zp_length);
    ComplexVector y(symbols.size() + zp_length, 0.0);
    for (std::size_t k = 0; k < symbols.size(); ++k)
        for (std::size_t m = 0; m < taps.size(); ++m)
            y[k + m] += taps[m] * symbols[k];
    return y;
}

// y = sqrt(gamma) (taps * [s; 0]) + CN(0, 1) noise
inline ComplexVector zp_transmit_receive(const SisoChannel &siso, std::span<const cplx> symbols, double gamma,
                                         std::size_t zp_length, Rng &rng)
{
    if (!(gamma >= 0.0))
        throw ContractViolation("zp_transmit_receive: SNR must be non-negative");
    auto y = zp_convolve(siso.taps, symbols, zp_length);
    const double amp = std::sqrt(gamma);
    for (auto &v : y)
        v = amp * v + complex_gaussian(rng, 1.0);
    return y;
}

// s_hat = (H^H H + I / gamma)^{-1} H^H y / sqrt(gamma), H the (P + zp) x P
// convolution matrix. H^H H is formed once per channel and reused across SNR points.
class MmseEqualizer
{
public:
    MmseEqualizer(const SisoChannel &siso, std::size_t block_size, std::size_t zp_length)
        : h_(convolution_matrix(siso.taps, block_size, zp_length)), gram_(gram(h_))
    {
    }

    ComplexVector operator()(std::span<const cplx> received, double gamma) const
    {
        if (!(gamma > 0.0))
            throw ContractViolation("mmse_equalize: SNR must be positive");
        if (received.size() != h_.rows())
            throw ContractViolation("mmse_equalize: received block length must be P + zp");
        auto a = gram_;
        for (std::size_t i = 0; i < a.rows(); ++i)
            a(i, i) += 1.0 / gamma;
        auto rhs = adjoint_matvec(h_, received);
        const double inv = 1.0 / std::sqrt(gamma);
        for (auto &v : rhs)
            v *= inv;
        return cholesky_solve(a, std::move(rhs));
    }

private:
    ComplexMatrix h_;
    ComplexMatrix gram_;
};

inline ComplexVector mmse_equalize(const SisoChannel &siso, std::span<const cplx> received, double gamma,
                                   std::size_t block_size)
{
    if (received.size() < block_size)
        throw ContractViolation("mmse_equalize: received block shorter than the symbol block");
    return MmseEqualizer(siso, block_size, received.size() - block_size)(received, gamma);
}

struct LinkSimConfig
{
    std::size_t block_size = 32;
    std::size_t zp_length = 8;
    std::size_t blocks = 100000;
    std::size_t redraw_interval = 1; // blocks per channel realization
    SnrGrid grid;
    std::size_t threads = 0;
    InfeasibleDrawPolicy infeasible = InfeasibleDrawPolicy::abort;

    void validate() const
    {
        if (block_size < 1)
            throw ContractViolation("LinkSimConfig: block_size must be >= 1");
        if (blocks < 1)
            throw ContractViolation("LinkSimConfig: blocks must be >= 1");
        if (redraw_interval < 1)
            throw ContractViolation("LinkSimConfig: redraw_interval must be >= 1");
        grid.validate();
    }
};

struct BlerCurve
{
    std::string scheme;
    SnrGrid grid;
    std::vector<std::size_t> errors;
    std::vector<double> bler;
    std::vector<double> stderr_; // binomial
    std::size_t blocks = 0;
    std::size_t redraws = 0;
};

// Block b: channel and scheme streams indexed by b / redraw_interval, bits and
// noise from derive_stream(seed, b, data). The same bits are sent at every SNR point.
inline BlerCurve simulate_bler(const ChannelEnsembleConfig &scenario, const SchemeSpec &scheme,
                               const LinkSimConfig &config, std::uint64_t seed)
{
    scenario.validate();
    config.validate();
    const std::size_t K = config.grid.size();
    std::vector<std::uint8_t> failed(config.blocks * K, 0);
    std::vector<std::size_t> redraws(config.blocks, 0);

    parallel_for(config.blocks, config.threads, [&](std::size_t b) {
        const std::size_t realization = b / config.redraw_interval;
        Rng channel_rng = derive_stream(seed, realization, StreamLane::channel);
        Rng scheme_rng = derive_stream(seed, realization, StreamLane::scheme);
        Rng data_rng = derive_stream(seed, b, StreamLane::data);
        const auto draw = draw_trial(scenario, scheme, channel_rng, scheme_rng, config.infeasible,
                                     "block " + std::to_string(b) + " (seed " + std::to_string(seed) + ")");
        const auto &channel = draw.channel;
        const auto &sol = draw.solution;
        redraws[b] = draw.redraws;
        const auto siso = siso_equivalent(channel, sol.w_t, sol.w_r);
        detail::check_guard(siso.taps, config.zp_length);

        Bits bits(2 * config.block_size);
        std::bernoulli_distribution coin(0.5);
        for (auto &bit : bits)
            bit = coin(data_rng) ? 1 : 0;
        const auto symbols = qpsk_modulate(bits);
        const MmseEqualizer equalize(siso, config.block_size, config.zp_length);
        for (std::size_t k = 0; k < K; ++k)
        {
            const double gamma = config.grid.points[k];
            const auto y = zp_transmit_receive(siso, symbols, gamma, config.zp_length, data_rng);
            const auto decided = qpsk_demodulate(equalize(y, gamma));
            failed[b * K + k] = decided != bits ? 1 : 0;
        }
    });

    BlerCurve curve;
    curve.scheme = scheme.name();
    curve.grid = config.grid;
    curve.blocks = config.blocks;
    for (auto r : redraws)
        curve.redraws += r;
    const auto n = static_cast<double>(config.blocks);
    for (std::size_t k = 0; k < K; ++k)
    {
        std::size_t e = 0;
        for (std::size_t b = 0; b < config.blocks; ++b)
            e += failed[b * K + k];
        const double p = static_cast<double>(e) / n;
        curve.errors.push_back(e);
        curve.bler.push_back(p);
        curve.stderr_.push_back(std::sqrt(p * (1.0 - p) / n));
    }
    return curve;
}

inline void write_bler_csv(std::ostream &os, const BlerCurve &curve)
{
    os << "snr_db,bler,blocks,stderr\n";
    const auto db = curve.grid.db();
    for (std::size_t i = 0; i < db.size(); ++i)
        os << format_sci(db[i]) << ',' << format_sci(curve.bler[i]) << ',' << curve.blocks << ','
           << format_sci(curve.stderr_[i]) << '\n';
}

} // namespace beamsim

#endif
