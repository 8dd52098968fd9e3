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

#ifndef BEAMSIM_GROUPED_HPP
#define BEAMSIM_GROUPED_HPP

// Beamforming from steering vectors only (no fading coefficients).
//
// Park-Pan: unit gain along every path, w = A (A^H A)^{-1} gains, then normalize.
// Park-Pan*: the same on a random subset of n paths per end when L exceeds n.
// MPG: bucket paths into n uniform cosine-angle segments per end, replace each
// non-empty bucket with the normalized sum of its steering vectors, then solve the
// (smaller, better conditioned) Park-Pan system on those equivalent vectors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "beamsim/channel.hpp"
#include "beamsim/errors.hpp"
#include "beamsim/linalg.hpp"
#include "beamsim/random.hpp"
#include "beamsim/solution.hpp"

namespace beamsim
{

// H-bar (n_t x L) and G-bar (n_r x L), plus the angles when they are known
struct SteeringSet
{
    ComplexMatrix tx;
    ComplexMatrix rx;
    std::optional<std::vector<double>> omega_t;
    std::optional<std::vector<double>> omega_r;

    std::size_t num_paths() const { return tx.cols(); }
};

inline SteeringSet steering_set(const MultipathChannel &channel)
{
    std::vector<ComplexVector> h, g;
    std::vector<double> wt, wr;
    for (std::size_t l = 0; l < channel.num_paths(); ++l)
    {
        h.push_back(channel.tx_steering(l));
        g.push_back(channel.rx_steering(l));
        wt.push_back(channel.paths()[l].omega_t);
        wr.push_back(channel.paths()[l].omega_r);
    }
    return {ComplexMatrix::from_columns(h), ComplexMatrix::from_columns(g), std::move(wt), std::move(wr)};
}

// Steering set built from estimated vectors (angles unknown; only Bartlett grouping applies)
inline SteeringSet steering_set(const std::vector<ComplexVector> &tx, const std::vector<ComplexVector> &rx)
{
    if (tx.size() != rx.size() || tx.empty())
        throw ContractViolation("steering_set: need the same non-zero number of transmit and receive vectors");
    return {ComplexMatrix::from_columns(tx), ComplexMatrix::from_columns(rx), std::nullopt, std::nullopt};
}

struct GainVectors
{
    ComplexVector b; // transmit gains beta_l
    ComplexVector a; // receive gains alpha_l

    static GainVectors all_ones(std::size_t L) { return {ComplexVector(L, 1.0), ComplexVector(L, 1.0)}; }
};

namespace detail
{

// Columns that repeat an earlier column exactly describe the same direction and
// impose the same constraint, so they are merged. Conflicting gains on a merged
// direction have no solution.
inline std::pair<ComplexMatrix, ComplexVector> distinct_directions(const ComplexMatrix &cols, const ComplexVector &gains,
                                                                  const char *end)
{
    std::vector<ComplexVector> keep;
    ComplexVector keep_gain;
    for (std::size_t l = 0; l < cols.cols(); ++l)
    {
        const auto c = cols.column(l);
        bool dup = false;
        for (std::size_t k = 0; k < keep.size(); ++k)
        {
            ComplexVector d(c.size());
            for (std::size_t i = 0; i < c.size(); ++i)
                d[i] = c[i] - keep[k][i];
            if (norm2(d) <= 1e-12)
            {
                if (std::abs(gains[l] - keep_gain[k]) > 1e-12)
                    throw InfeasibleSchemeError(std::string("conflicting gains on a repeated ") + end +
                                                " steering direction");
                dup = true;
                break;
            }
        }
        if (!dup)
        {
            keep.push_back(c);
            keep_gain.push_back(gains[l]);
        }
    }
    return {ComplexMatrix::from_columns(keep), std::move(keep_gain)};
}

struct RightInverse
{
    ComplexVector awv; // normalized
    double scale = 0.0;
};

// square_direct: a square system is solved directly and judged by its own
// reciprocal condition instead of the Gram matrix's (Park-Pan* selections)
inline RightInverse right_inverse_awv(const ComplexMatrix &cols, const ComplexVector &gains, const char *end,
                                      bool square_direct = false)
{
    if (cols.cols() > cols.rows())
        throw InfeasibleSchemeError(std::string(end) + ": " + std::to_string(cols.cols()) +
                                    " distinct steering directions exceed " + std::to_string(cols.rows()) +
                                    " antennas");
    ComplexVector x;
    try
    {
        x = square_direct && cols.square() ? square_adjoint_solve(cols, gains) : gram_right_pseudo_apply(cols, gains);
    }
    catch (const RankDeficientError &e)
    {
        throw InfeasibleSchemeError(std::string(end) + ": " + e.what());
    }
    const double s = norm2(x);
    for (auto &v : x)
        v /= s;
    return {canonical_phase(std::move(x)), s};
}

inline void check_steering(const SteeringSet &steering, const GainVectors &gains)
{
    const std::size_t L = steering.num_paths();
    if (L == 0 || steering.rx.cols() != L)
        throw ContractViolation("SteeringSet: transmit and receive sets must have the same non-zero path count");
    if (gains.a.size() != L || gains.b.size() != L)
        throw ContractViolation("GainVectors: one gain per path required");
}

inline ComplexVector conjugated(ComplexVector v)
{
    for (auto &x : v)
        x = std::conj(x);
    return v;
}

} // namespace detail

// w_t = Hbar (Hbar^H Hbar)^{-1} b,  w_r = Gbar (Gbar^H Gbar)^{-1} a^*, both normalized
inline BeamformingSolution parkpan_beamform(const SteeringSet &steering, const GainVectors &gains)
{
    detail::check_steering(steering, gains);
    const auto [tx_cols, b] = detail::distinct_directions(steering.tx, gains.b, "transmit");
    const auto [rx_cols, a] = detail::distinct_directions(steering.rx, gains.a, "receive");
    const auto t = detail::right_inverse_awv(tx_cols, b, "Park-Pan transmit");
    const auto r = detail::right_inverse_awv(rx_cols, detail::conjugated(a), "Park-Pan receive");

    BeamformingSolution sol;
    sol.scheme = "parkpan";
    sol.w_t = t.awv;
    sol.w_r = r.awv;
    sol.tx_scale = t.scale;
    sol.rx_scale = r.scale;
    return sol;
}

namespace detail
{

inline std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t count, Rng &rng)
{
    std::vector<std::size_t> idx(population);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // partial Fisher-Yates
    for (std::size_t i = 0; i < count; ++i)
    {
        std::uniform_int_distribution<std::size_t> pick(i, population - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline ComplexMatrix select_columns(const ComplexMatrix &m, const std::vector<std::size_t> &idx)
{
    ComplexMatrix out(m.rows(), idx.size());
    for (std::size_t c = 0; c < idx.size(); ++c)
        for (std::size_t r = 0; r < m.rows(); ++r)
            out(r, c) = m(r, idx[c]);
    return out;
}

inline ComplexVector select_entries(const ComplexVector &v, const std::vector<std::size_t> &idx)
{
    ComplexVector out;
    for (auto i : idx)
        out.push_back(v[i]);
    return out;
}

} // namespace detail

inline constexpr int parkpan_star_max_attempts = 10;

// Park-Pan on min(L, n) randomly selected paths per end. Identical to
// parkpan_beamform (and draws nothing) when L <= min(n_t, n_r).
inline BeamformingSolution parkpan_star_beamform(const SteeringSet &steering, const GainVectors &gains, Rng &rng)
{
    detail::check_steering(steering, gains);
    const std::size_t L = steering.num_paths();
    const std::size_t n_t = steering.tx.rows(), n_r = steering.rx.rows();
    if (L <= std::min(n_t, n_r))
    {
        auto sol = parkpan_beamform(steering, gains);
        sol.scheme = "parkpan_star";
        return sol;
    }

    std::string last_error;
    for (int attempt = 0; attempt < parkpan_star_max_attempts; ++attempt)
    {
        const auto tx_idx = detail::sample_without_replacement(L, std::min(L, n_t), rng);
        const auto rx_idx = detail::sample_without_replacement(L, std::min(L, n_r), rng);
        SteeringSet sub{detail::select_columns(steering.tx, tx_idx), detail::select_columns(steering.rx, rx_idx),
                        std::nullopt, std::nullopt};
        try
        {
            const auto [tx_cols, b] = detail::distinct_directions(sub.tx, detail::select_entries(gains.b, tx_idx),
                                                                  "transmit");
            const auto [rx_cols, a] = detail::distinct_directions(sub.rx, detail::select_entries(gains.a, rx_idx),
                                                                  "receive");
            const auto t = detail::right_inverse_awv(tx_cols, b, "Park-Pan* transmit", true);
            const auto r = detail::right_inverse_awv(rx_cols, detail::conjugated(a), "Park-Pan* receive", true);
            BeamformingSolution sol;
            sol.scheme = "parkpan_star";
            sol.w_t = t.awv;
            sol.w_r = r.awv;
            sol.tx_scale = t.scale;
            sol.rx_scale = r.scale;
            sol.tx_selection = tx_idx;
            sol.rx_selection = rx_idx;
            return sol;
        }
        catch (const InfeasibleSchemeError &e)
        {
            last_error = e.what();
        }
    }
    throw InfeasibleSchemeError("Park-Pan*: no invertible selection after " +
                                std::to_string(parkpan_star_max_attempts) + " attempts (" + last_error + ")");
}

// ---------- grouping ----------

// Left edge of segment i (1-indexed): -1 + 2 (i - 1) / n
inline double segment_left_edge(std::size_t i, std::size_t n)
{
    return -1.0 + 2.0 * static_cast<double>(i - 1) / static_cast<double>(n);
}

namespace detail
{

inline GroupAssignment make_assignment(std::vector<std::size_t> segment_of_path, std::size_t n)
{
    GroupAssignment g;
    g.segment_count = n;
    for (std::size_t l = 0; l < segment_of_path.size(); ++l)
        g.groups[segment_of_path[l]].push_back(l);
    g.segment_of_path = std::move(segment_of_path);
    return g;
}

} // namespace detail

// Path l goes to segment i iff Omega_l lies in [-1 + 2(i-1)/n, -1 + 2i/n)
inline GroupAssignment group_by_angle(std::span<const double> omegas, std::size_t segment_count)
{
    if (segment_count < 1)
        throw ContractViolation("group_by_angle: segment count must be >= 1");
    const std::size_t n = segment_count;
    std::vector<std::size_t> seg(omegas.size());
    for (std::size_t l = 0; l < omegas.size(); ++l)
    {
        const double w = omegas[l];
        if (!valid_cosine_angle(w))
            throw ContractViolation("group_by_angle: angle outside [-1, 1)");
        auto i = static_cast<std::size_t>(std::floor((w + 1.0) * static_cast<double>(n) / 2.0)) + 1;
        i = std::clamp<std::size_t>(i, 1, n);
        // settle against the edges exactly as the interval formula evaluates them
        while (i > 1 && w < segment_left_edge(i, n))
            --i;
        while (i < n && w >= segment_left_edge(i + 1, n))
            ++i;
        seg[l] = i;
    }
    return detail::make_assignment(std::move(seg), n);
}

// Dictionary vector v_i: steering vector at the centre of segment i, -1 + (2i - 1)/n
inline ComplexVector bartlett_dictionary_vector(std::size_t i, std::size_t n)
{
    return steering_vector(n, -1.0 + (2.0 * static_cast<double>(i) - 1.0) / static_cast<double>(n));
}

// Path l goes to arg max_i |v_i^H h_l|. Correlations within a relative 1e-12 of the
// peak are ties and the lowest index wins.
inline GroupAssignment group_by_bartlett(const std::vector<ComplexVector> &steering_vectors, std::size_t segment_count)
{
    const std::size_t n = segment_count;
    if (n < 1)
        throw ContractViolation("group_by_bartlett: segment count must be >= 1");
    std::vector<ComplexVector> dict;
    for (std::size_t i = 1; i <= n; ++i)
        dict.push_back(bartlett_dictionary_vector(i, n));

    std::vector<std::size_t> seg(steering_vectors.size());
    std::vector<double> corr(n);
    for (std::size_t l = 0; l < steering_vectors.size(); ++l)
    {
        if (steering_vectors[l].size() != n)
            throw ContractViolation("group_by_bartlett: steering vector length must equal the segment count");
        double peak = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            corr[i] = std::abs(inner(dict[i], steering_vectors[l]));
            peak = std::max(peak, corr[i]);
        }
        std::size_t pick = 0;
        while (corr[pick] < peak * (1.0 - 1e-12))
            ++pick;
        seg[l] = pick + 1;
    }
    return detail::make_assignment(std::move(seg), n);
}

inline GroupAssignment group_by_bartlett(const ComplexMatrix &columns)
{
    std::vector<ComplexVector> v;
    for (std::size_t c = 0; c < columns.cols(); ++c)
        v.push_back(columns.column(c));
    return group_by_bartlett(v, columns.rows());
}

// (sum_j members_j) / ||sum_j members_j||. A single member is returned unchanged.
inline ComplexVector equivalent_steering(const std::vector<ComplexVector> &members)
{
    if (members.empty())
        throw ContractViolation("equivalent_steering: empty group");
    if (members.size() == 1)
        return members.front();
    ComplexVector sum(members.front().size(), 0.0);
    for (const auto &m : members)
    {
        if (m.size() != sum.size())
            throw ContractViolation("equivalent_steering: member length mismatch");
        for (std::size_t i = 0; i < sum.size(); ++i)
            sum[i] += m[i];
    }
    const double s = norm2(sum);
    if (s <= 1e-12)
        throw DegenerateGroupError("equivalent_steering: member steering vectors cancel");
    for (auto &x : sum)
        x /= s;
    return sum;
}

inline MultipathGroups build_groups(const ComplexMatrix &columns, GroupAssignment assignment)
{
    MultipathGroups g;
    for (const auto &[segment, members] : assignment.groups)
    {
        std::vector<ComplexVector> vs;
        for (auto l : members)
            vs.push_back(columns.column(l));
        g.equivalent_vectors.push_back(equivalent_steering(vs));
    }
    g.assignment = std::move(assignment);
    return g;
}

enum class GroupingMethod
{
    angle,
    bartlett,
};

inline BeamformingSolution mpg_beamform(const SteeringSet &steering, const ArrayConfig &arrays,
                                        GroupingMethod method = GroupingMethod::angle)
{
    const std::size_t L = steering.num_paths();
    if (L == 0 || steering.rx.cols() != L)
        throw ContractViolation("mpg_beamform: transmit and receive sets must have the same non-zero path count");
    if (steering.tx.rows() != arrays.n_t || steering.rx.rows() != arrays.n_r)
        throw ContractViolation("mpg_beamform: steering vector lengths do not match the arrays");
    if (method == GroupingMethod::angle && (!steering.omega_t || !steering.omega_r))
        throw ContractViolation("mpg_beamform: angle grouping needs the steering angles");

    GroupingRecord rec;
    rec.tx_by_bartlett = group_by_bartlett(steering.tx);
    rec.rx_by_bartlett = group_by_bartlett(steering.rx);
    if (steering.omega_t && steering.omega_r)
    {
        rec.tx_by_angle = group_by_angle(*steering.omega_t, arrays.n_t);
        rec.rx_by_angle = group_by_angle(*steering.omega_r, arrays.n_r);
    }
    const bool by_angle = method == GroupingMethod::angle;
    rec.tx = build_groups(steering.tx, by_angle ? *rec.tx_by_angle : rec.tx_by_bartlett);
    rec.rx = build_groups(steering.rx, by_angle ? *rec.rx_by_angle : rec.rx_by_bartlett);

    const auto tx_cols = ComplexMatrix::from_columns(rec.tx.equivalent_vectors);
    const auto rx_cols = ComplexMatrix::from_columns(rec.rx.equivalent_vectors);
    const auto t = detail::right_inverse_awv(tx_cols, ComplexVector(tx_cols.cols(), 1.0), "MPG transmit");
    const auto r = detail::right_inverse_awv(rx_cols, ComplexVector(rx_cols.cols(), 1.0), "MPG receive");

    BeamformingSolution sol;
    sol.scheme = "mpg";
    sol.w_t = t.awv;
    sol.w_r = r.awv;
    sol.tx_scale = t.scale;
    sol.rx_scale = r.scale;
    sol.grouping = std::move(rec);
    return sol;
}

} // namespace beamsim

#endif
