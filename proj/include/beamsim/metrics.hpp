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

#ifndef BEAMSIM_METRICS_HPP
#define BEAMSIM_METRICS_HPP

// Pairwise-error-probability bounds and diversity estimation.
//
// Instantaneous bound:  Q(d sqrt(gamma Gamma / 2)), unit noise power, gamma the
// transmit SNR. The Monte Carlo driver averages it over channel draws.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "beamsim/channel.hpp"
#include "beamsim/errors.hpp"
#include "beamsim/ievd.hpp"
#include "beamsim/parallel.hpp"
#include "beamsim/random.hpp"
#include "beamsim/schemes.hpp"

namespace beamsim
{

inline double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

struct SnrGrid
{
    std::vector<double> points; // linear transmit SNR

    static SnrGrid from_db(const std::vector<double> &db)
    {
        SnrGrid g;
        for (double v : db)
            g.points.push_back(db_to_linear(v));
        g.validate();
        return g;
    }

    // start, start + step, ... up to and including stop
    static SnrGrid db_range(double start, double stop, double step)
    {
        if (!(step > 0.0) || !(stop >= start))
            throw ContractViolation("SnrGrid: need step > 0 and stop >= start");
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        std::vector<double> db(count);
        for (std::size_t i = 0; i < count; ++i)
            db[i] = start + step * static_cast<double>(i);
        return from_db(db);
    }

    std::vector<double> db() const
    {
        std::vector<double> out;
        for (double p : points)
            out.push_back(linear_to_db(p));
        return out;
    }

    std::size_t size() const { return points.size(); }

    void validate() const
    {
        if (points.empty())
            throw ContractViolation("SnrGrid: empty grid");
        for (std::size_t i = 0; i < points.size(); ++i)
        {
            if (!(points[i] > 0.0) || !std::isfinite(points[i]))
                throw ContractViolation("SnrGrid: SNR values must be finite and positive");
            if (i > 0 && !(points[i] > points[i - 1]))
                throw ContractViolation("SnrGrid: SNR values must be strictly increasing");
        }
    }
};

namespace detail
{

inline void check_unit(std::span<const cplx> w, const char *what)
{
    if (std::abs(norm2(w) - 1.0) > 1e-8)
        throw ContractViolation(std::string(what) + " must have unit norm");
}

inline void check_pep_args(double gamma, double d)
{
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
        throw ContractViolation("PEP: SNR must be finite and non-negative");
    if (!(d > 0.0))
        throw ContractViolation("PEP: minimum distance must be positive");
}

} // namespace detail

// Q(d sqrt(gamma Gamma / 2)) for a known array gain
inline double pep_from_gain(double gamma, double array_gain_value, double d)
{
    detail::check_pep_args(gamma, d);
    return q_function(d * std::sqrt(gamma * array_gain_value / 2.0));
}

inline double pep_bound_instant(const MultipathChannel &channel, std::span<const cplx> w_t, std::span<const cplx> w_r,
                                double gamma, double d)
{
    detail::check_unit(w_t, "w_t");
    detail::check_unit(w_r, "w_r");
    return pep_from_gain(gamma, array_gain(channel, w_t, w_r), d);
}

// prod_l (1 + d^2 gamma n_t n_r |w_r^H g_l h_l^H w_t|^2 sigma^2 / 4)^{-1}, the
// exponential Chernoff form averaged over lambda_l ~ CN(0, sigma^2). sigma^2
// defaults to 1/L.
inline double pep_product_bound(const MultipathChannel &channel, std::span<const cplx> w_t, std::span<const cplx> w_r,
                                double gamma, double d, std::optional<double> coefficient_variance = std::nullopt)
{
    detail::check_unit(w_t, "w_t");
    detail::check_unit(w_r, "w_r");
    detail::check_pep_args(gamma, d);
    const double var = coefficient_variance.value_or(1.0 / static_cast<double>(channel.num_paths()));
    const double nn = static_cast<double>(channel.arrays().n_t * channel.arrays().n_r);
    double p = 1.0;
    for (std::size_t l = 0; l < channel.num_paths(); ++l)
    {
        const double c = std::norm(inner(w_r, channel.rx_steering(l)) * inner(channel.tx_steering(l), w_t));
        p /= 1.0 + d * d * gamma * nn * c * var / 4.0;
    }
    return p;
}

// E[Q(sqrt(2 rho Y))] for Y ~ Gamma(L, 1):
//   ((1 - mu) / 2)^L sum_{k<L} C(L-1+k, k) ((1 + mu) / 2)^k,  mu = sqrt(rho / (1 + rho))
inline double gamma_mrc_q_expectation(double rho, std::size_t L)
{
    if (L < 1)
        throw ContractViolation("gamma_mrc_q_expectation: L must be >= 1");
    if (!(rho >= 0.0))
        throw ContractViolation("gamma_mrc_q_expectation: rho must be >= 0");
    if (std::isinf(rho))
        return 0.0;
    const double mu = std::sqrt(rho / (1.0 + rho));
    const double low = 0.5 / ((1.0 + rho) * (1.0 + mu)); // (1 - mu) / 2 without cancellation
    const double high = 0.5 * (1.0 + mu);
    double sum = 0.0, term = 1.0; // term = C(L-1+k, k) high^k
    for (std::size_t k = 0; k < L; ++k)
    {
        sum += term;
        term *= high * static_cast<double>(L + k) / static_cast<double>(k + 1);
    }
    return std::pow(low, static_cast<double>(L)) * sum;
}

enum class PepEstimator
{
    // Average Q(d sqrt(gamma Gamma / 2)) over the drawn channels
    instantaneous,
    // Average, over the drawn coefficient directions, the exact expectation of the
    // bound over the coefficient norm. The schemes see lambda only through its
    // direction, ||lambda||^2 / sigma^2 ~ Gamma(L, 1) independently of it, so this
    // has the same mean with far smaller variance deep in the tail.
    radial_conditional,
};

struct PepOptions
{
    PepEstimator estimator = PepEstimator::instantaneous;
    std::size_t threads = 0;
    InfeasibleDrawPolicy infeasible = InfeasibleDrawPolicy::abort;
};

struct PepCurve
{
    std::string scheme;
    SnrGrid grid;
    std::vector<double> pep;
    std::vector<double> stderr_;
    std::size_t samples = 0;
    std::size_t redraws = 0; // infeasible channel draws replaced under InfeasibleDrawPolicy::redraw
};

struct MonteCarloStats
{
    double mean = 0.0;
    double stderr_ = 0.0;
};

inline MonteCarloStats sample_stats(const std::vector<double> &values)
{
    MonteCarloStats s;
    const auto n = static_cast<double>(values.size());
    if (values.empty())
        return s;
    double sum = 0.0;
    for (double v : values)
        sum += v;
    s.mean = sum / n;
    if (values.size() > 1)
    {
        double ss = 0.0;
        for (double v : values)
            ss += (v - s.mean) * (v - s.mean);
        s.stderr_ = std::sqrt(ss / (n - 1.0) / n);
    }
    return s;
}

inline constexpr std::size_t pep_min_samples = 100;

// Trial t draws its channel from derive_stream(seed, t, channel) and feeds the
// scheme from derive_stream(seed, t, scheme).
inline PepCurve pep_monte_carlo(const ChannelEnsembleConfig &scenario, const SchemeSpec &scheme, const SnrGrid &grid,
                                std::size_t samples, double d, std::uint64_t seed, const PepOptions &options = {})
{
    scenario.validate();
    grid.validate();
    if (samples < pep_min_samples)
        throw ContractViolation("pep_monte_carlo: at least " + std::to_string(pep_min_samples) + " samples required");
    if (!(d > 0.0))
        throw ContractViolation("pep_monte_carlo: minimum distance must be positive");
    const bool conditional = options.estimator == PepEstimator::radial_conditional;
    if (conditional && !scheme.scale_invariant())
        throw ContractViolation("pep_monte_carlo: the radial-conditional estimator needs noiseless training");

    // per-trial array gain (conditional: per unit coefficient norm)
    std::vector<double> gain(samples);
    std::vector<std::size_t> redraws(samples, 0);
    parallel_for(samples, options.threads, [&](std::size_t t) {
        Rng channel_rng = derive_stream(seed, t, StreamLane::channel);
        Rng scheme_rng = derive_stream(seed, t, StreamLane::scheme);
        const auto draw = draw_trial(scenario, scheme, channel_rng, scheme_rng, options.infeasible,
                                     "trial " + std::to_string(t) + " (seed " + std::to_string(seed) + ")");
        const auto &channel = draw.channel;
        const auto &sol = draw.solution;
        redraws[t] = draw.redraws;
        const double g = array_gain(channel, sol.w_t, sol.w_r);
        gain[t] = conditional ? g / channel.coefficient_energy() : g;
    });

    PepCurve curve;
    curve.scheme = scheme.name();
    curve.grid = grid;
    curve.samples = samples;
    for (auto r : redraws)
        curve.redraws += r;
    const double var = scenario.variance();
    std::vector<double> values(samples);
    for (double gamma : grid.points)
    {
        for (std::size_t t = 0; t < samples; ++t)
            values[t] = conditional
                            ? gamma_mrc_q_expectation(d * d * gamma * var * gain[t] / 4.0, scenario.num_paths)
                            : pep_from_gain(gamma, gain[t], d);
        const auto s = sample_stats(values);
        curve.pep.push_back(s.mean);
        curve.stderr_.push_back(s.stderr_);
    }
    return curve;
}

struct DiversityFit
{
    double slope = 0.0;     // negated log-log slope
    double fit_db_min = 0.0; // fit range (dB)
    double fit_db_max = 0.0;
    std::size_t points = 0;
    double r_squared = 0.0;
    std::vector<std::string> warnings;
};

// Least-squares slope of log10(pep) against log10(gamma) over the top
// `high_snr_fraction` of the grid (at least 3 points), negated.
inline DiversityFit diversity_fit(const SnrGrid &grid, const std::vector<double> &pep, double high_snr_fraction = 0.4)
{
    if (pep.size() != grid.size())
        throw ContractViolation("diversity_fit: one value per grid point required");
    if (!(high_snr_fraction > 0.0 && high_snr_fraction <= 1.0))
        throw ContractViolation("diversity_fit: fraction must lie in (0, 1]");
    const std::size_t n = grid.size();
    const auto want = std::min(
        n, std::max<std::size_t>(3, static_cast<std::size_t>(std::ceil(high_snr_fraction * static_cast<double>(n) - 1e-9))));

    DiversityFit fit;
    std::vector<double> x, y;
    std::vector<double> db = grid.db();
    for (std::size_t i = n - want; i < n; ++i)
    {
        if (!(pep[i] > 0.0) || !std::isfinite(pep[i]))
        {
            fit.warnings.push_back("dropped " + std::to_string(db[i]) + " dB: value underflowed");
            continue;
        }
        x.push_back(std::log10(grid.points[i]));
        y.push_back(std::log10(pep[i]));
        if (x.size() == 1)
            fit.fit_db_min = db[i];
        fit.fit_db_max = db[i];
    }
    if (x.size() < 3)
        throw ContractViolation("diversity_fit: fewer than 3 usable points in the fit range");

    const auto m = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        mx += x[i];
        my += y[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double b = sxy / sxx;
    fit.slope = -b;
    fit.points = x.size();
    fit.r_squared = syy > 0.0 ? (b * sxy) / syy : 1.0;
    return fit;
}

inline DiversityFit diversity_fit(const PepCurve &curve, double high_snr_fraction = 0.4)
{
    return diversity_fit(curve.grid, curve.pep, high_snr_fraction);
}

// 10 significant digits in scientific notation
inline std::string format_sci(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9e", v);
    return buf;
}

inline void write_pep_csv(std::ostream &os, const PepCurve &curve)
{
    os << "snr_db,pep_mean,pep_stderr,samples\n";
    const auto db = curve.grid.db();
    for (std::size_t i = 0; i < db.size(); ++i)
        os << format_sci(db[i]) << ',' << format_sci(curve.pep[i]) << ',' << format_sci(curve.stderr_[i]) << ','
           << curve.samples << '\n';
}

} // namespace beamsim

#endif
