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

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "beamsim/linalg.hpp"
#include "beamsim/channel.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace beamsim;

namespace
{

double rayleigh(const ComplexMatrix &m, const ComplexVector &v) { return inner(v, matvec(m, v)).real() / inner(v, v).real(); }

ComplexMatrix diag2(double a, double b)
{
    ComplexMatrix m(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

} // namespace

TEST(Linalg, SolveMatchesDenseOracle)
{
    Rng rng(11);
    for (int t = 0; t < 50; ++t)
    {
        const std::size_t n = gen::uniform_int(rng, 1, 12);
        const auto a = gen::gaussian_matrix(rng, n, n);
        const auto b = gen::unit_vector(rng, n);
        const auto x = solve(a, b);
        const auto ref = oracle::dense_solve(a, b);
        for (std::size_t i = 0; i < n; ++i)
            EXPECT_NEAR(std::abs(x[i] - ref[i]), 0.0, 1e-8 * (1.0 + std::abs(ref[i])));
    }
}

TEST(Linalg, SolveRejectsSingular)
{
    ComplexMatrix a(2, 2);
    a(0, 0) = 1.0;
    a(0, 1) = 2.0;
    a(1, 0) = 2.0;
    a(1, 1) = 4.0;
    EXPECT_THROW(solve(a, {1.0, 1.0}), RankDeficientError);
}

TEST(Linalg, CholeskyMatchesSolve)
{
    Rng rng(12);
    for (int t = 0; t < 30; ++t)
    {
        const std::size_t n = gen::uniform_int(rng, 1, 10);
        auto m = gen::psd_matrix(rng, n, n + 2);
        const auto b = gen::unit_vector(rng, n);
        const auto x = cholesky_solve(m, b);
        const auto ref = oracle::dense_solve(m, b);
        for (std::size_t i = 0; i < n; ++i)
            EXPECT_LT(std::abs(x[i] - ref[i]), 1e-8 * (1.0 + std::abs(ref[i])));
    }
    EXPECT_THROW(cholesky_solve(diag2(1.0, 0.0), {1.0, 1.0}), RankDeficientError);
}

TEST(Linalg, HermitianEigenMatchesEigen)
{
    Rng rng(13);
    for (int t = 0; t < 40; ++t)
    {
        const std::size_t n = gen::uniform_int(rng, 1, 12);
        const auto m = gen::psd_matrix(rng, n, gen::uniform_int(rng, 1, n));
        const auto eig = hermitian_eigen(m);
        const auto ref = oracle::eigenvalues_descending(m);
        const double scale = ref.front();
        for (std::size_t k = 0; k < n; ++k)
            EXPECT_NEAR(eig.values[k], ref[k], 1e-10 * scale);
        // A v = lambda v for the leading pair
        const auto v = eig.vectors.column(0);
        const auto av = matvec(m, v);
        for (std::size_t i = 0; i < n; ++i)
            EXPECT_LT(std::abs(av[i] - eig.values[0] * v[i]), 1e-9 * scale);
    }
}

TEST(Linalg, PrincipalEigvecOfOuterSumMatchesEigen)
{
    Rng rng(14);
    for (int t = 0; t < 40; ++t)
    {
        const std::size_t n = gen::uniform_int(rng, 2, 10);
        const std::size_t m = gen::uniform_int(rng, 1, 12);
        const auto cols = gen::gaussian_matrix(rng, n, m);
        ComplexMatrix outer(n, n);
        for (std::size_t k = 0; k < m; ++k)
            add_outer(outer, cols.column(k));
        const auto ev = oracle::eigenvalues_descending(outer);
        if (ev.size() > 1 && ev[1] > 0.999 * ev[0])
            continue;
        const auto v = principal_eigvec_of_outer_sum(cols);
        EXPECT_NEAR(norm2(v), 1.0, 1e-12);
        EXPECT_LT(angular_distance(v, oracle::principal_eigenvector(outer)), 1e-6);
    }
}

TEST(PowerMethod, DiagonalConvergesWithinEightSteps)
{
    const auto seed = normalized(ComplexVector{1.0, 1.0});
    const auto r = principal_eigvec_power(diag2(4.0, 1.0), seed, 8);
    EXPECT_FALSE(r.degenerate);
    EXPECT_LT(angular_distance(r.vector, ComplexVector{1.0, 0.0}), 1e-3);
}

TEST(PowerMethod, RankOneProjectorIsExactInOneStep)
{
    Rng rng(15);
    const auto u = gen::unit_vector(rng, 6);
    ComplexMatrix p(6, 6);
    add_outer(p, u);
    const auto r = principal_eigvec_power(p, gen::unit_vector(rng, 6), 1);
    EXPECT_LT(angular_distance(r.vector, u), 1e-12);
}

TEST(PowerMethod, RandomPsdRayleighQuotientNearTop)
{
    Rng rng(16);
    for (int t = 0; t < 50; ++t)
    {
        const auto m = gen::psd_matrix(rng, 8, 8);
        const auto r = principal_eigvec_power(m, gen::unit_vector(rng, 8), 6);
        const double top = oracle::largest_eigenvalue(m);
        const auto ev = oracle::eigenvalues_descending(m);
        // six steps are enough once the top eigenvalue is reasonably isolated
        if (ev[1] > 0.5 * ev[0])
            continue;
        EXPECT_GT(rayleigh(m, r.vector), 0.99 * top);
    }
}

TEST(PowerMethod, RayleighQuotientMonotoneInPower)
{
    Rng rng(17);
    for (int t = 0; t < 100; ++t)
    {
        const auto m = gen::psd_matrix(rng, 8, gen::uniform_int(rng, 1, 8));
        const auto seed = gen::unit_vector(rng, 8);
        double prev = 0.0;
        for (std::size_t k = 1; k <= 10; ++k)
        {
            const auto r = principal_eigvec_power(m, seed, k);
            const double q = rayleigh(m, r.vector);
            EXPECT_GE(q, prev - 1e-10 * std::abs(prev));
            EXPECT_NEAR(norm2(r.vector), 1.0, 1e-12);
            prev = q;
        }
    }
}

TEST(PowerMethod, OrthogonalSeedFallsBack)
{
    const auto r = principal_eigvec_power(diag2(0.0, 1.0), ComplexVector{1.0, 0.0}, 2);
    EXPECT_TRUE(r.degenerate);
    EXPECT_EQ(r.vector, (ComplexVector{1.0, 0.0}));
}

TEST(PowerMethod, RejectsNonHermitianAndBadPower)
{
    ComplexMatrix m(2, 2);
    m(0, 1) = 1.0;
    EXPECT_THROW(principal_eigvec_power(m, ComplexVector{1.0, 0.0}, 1), ContractViolation);
    EXPECT_THROW(principal_eigvec_power(diag2(1, 1), ComplexVector{1.0, 0.0}, 0), ContractViolation);
    EXPECT_THROW(principal_eigvec_power(diag2(1, 1), ComplexVector{1.0}, 1), ContractViolation);
}

TEST(PseudoInverse, MatchesMinimumNormOracle)
{
    Rng rng(18);
    for (int t = 0; t < 100; ++t)
    {
        const std::size_t n = gen::uniform_int(rng, 2, 10);
        const std::size_t m = gen::uniform_int(rng, 1, n);
        const auto a = gen::gaussian_matrix(rng, n, m);
        const auto rhs = gen::unit_vector(rng, m);
        const auto x = gram_right_pseudo_apply(a, rhs);
        const auto ref = oracle::min_norm_solution(a, rhs);
        for (std::size_t i = 0; i < n; ++i)
            EXPECT_LT(std::abs(x[i] - ref[i]), 1e-8 * (1.0 + norm2(ref)));
        const auto res = adjoint_matvec(a, x);
        for (std::size_t i = 0; i < m; ++i)
            EXPECT_LT(std::abs(res[i] - rhs[i]), 1e-10);
    }
}

TEST(PseudoInverse, RejectsWideAndSingular)
{
    Rng rng(19);
    EXPECT_THROW(gram_right_pseudo_apply(gen::gaussian_matrix(rng, 3, 4), gen::unit_vector(rng, 4)),
                 RankDeficientError);
    const auto h = steering_vector(4, 0.25);
    const auto dup = ComplexMatrix::from_columns(std::vector<ComplexVector>{h, h});
    EXPECT_THROW(gram_right_pseudo_apply(dup, ComplexVector{1.0, 1.0}), RankDeficientError);
}

TEST(ConditionRatio, OrthonormalColumnsGiveOne)
{
    const auto a = ComplexMatrix::from_columns(
        std::vector<ComplexVector>{steering_vector(8, -1.0), steering_vector(8, -0.75), steering_vector(8, 0.5)});
    EXPECT_NEAR(condition_ratio(a), 1.0, 1e-10);
}

TEST(ConditionRatio, CloseSteeringAnglesAreIllConditioned)
{
    const auto a =
        ComplexMatrix::from_columns(std::vector<ComplexVector>{steering_vector(8, 0.0), steering_vector(8, 0.01)});
    const double c = condition_ratio(a);
    EXPECT_GT(c, 10.0);
    EXPECT_NEAR(c, oracle::singular_value_ratio(a), 1e-6 * c);
}

TEST(ConditionRatio, DuplicateColumnsAreInfinite)
{
    const auto h = steering_vector(8, 0.3);
    EXPECT_TRUE(std::isinf(condition_ratio(ComplexMatrix::from_columns(std::vector<ComplexVector>{h, h}))));
}

TEST(ConditionRatio, ScaleInvariant)
{
    Rng rng(20);
    for (int t = 0; t < 20; ++t)
    {
        auto a = gen::gaussian_matrix(rng, 6, 3);
        const double c = condition_ratio(a);
        const double s = gen::uniform(rng, 1e-3, 1e3);
        for (auto &x : a.data())
            x *= s;
        EXPECT_NEAR(condition_ratio(a), c, 1e-9 * c);
        EXPECT_NEAR(c, oracle::singular_value_ratio(a), 1e-8 * c);
    }
}

namespace
{

ComplexMatrix adjoint_of(const ComplexMatrix &a)
{
    ComplexMatrix h(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            h(c, r) = std::conj(a(r, c));
    return h;
}

} // namespace

TEST(SquareSolve, MatchesDenseOracle)
{
    Rng rng(21);
    for (int t = 0; t < 100; ++t)
    {
        const std::size_t n = gen::uniform_int(rng, 1, 10);
        const auto a = gen::gaussian_matrix(rng, n, n);
        const auto rhs = gen::unit_vector(rng, n);
        const auto x = square_adjoint_solve(a, rhs);
        const auto ref = oracle::dense_solve(adjoint_of(a), rhs);
        for (std::size_t i = 0; i < n; ++i)
            EXPECT_LT(std::abs(x[i] - ref[i]), 1e-9 * (1.0 + norm2(ref)));
    }
}

TEST(SquareSolve, RcondMatchesSvdOracle)
{
    Rng rng(22);
    for (int t = 0; t < 50; ++t)
    {
        const std::size_t n = gen::uniform_int(rng, 1, 8);
        const auto a = gen::gaussian_matrix(rng, n, n);
        EXPECT_NEAR(square_rcond(a), 1.0 / oracle::singular_value_ratio(a), 1e-9);
    }
}

TEST(SquareSolve, ResolvesSquareSteeringSetsBeyondTheGramFloor)
{
    // two tight clusters of steering angles: cond(A) ~ 4e7, so the Gram matrix sits below
    // the floor while A itself is comfortably invertible
    std::vector<ComplexVector> cols;
    for (double w : {-0.6, -0.595, -0.59, -0.585, -0.58, 0.3, 0.305, 0.31})
        cols.push_back(steering_vector(8, w));
    const auto a = ComplexMatrix::from_columns(cols);
    const double oracle_rc = 1.0 / oracle::singular_value_ratio(a);
    ASSERT_LT(oracle_rc * oracle_rc, rcond_floor);
    ASSERT_GT(oracle_rc, rcond_floor);
    EXPECT_THROW(gram_right_pseudo_apply(a, ComplexVector(8, 1.0)), RankDeficientError);
    EXPECT_NEAR(square_rcond(a) / oracle_rc, 1.0, 1e-4);

    const ComplexVector ones(8, 1.0);
    const auto x = square_adjoint_solve(a, ones);
    const auto res = adjoint_matvec(a, x);
    for (std::size_t i = 0; i < 8; ++i)
        EXPECT_LT(std::abs(res[i] - 1.0), 1e-10);
    // every column has first entry 1/sqrt(8), so sqrt(8) e_0 is the exact answer
    EXPECT_NEAR(std::abs(x[0]), std::sqrt(8.0), 1e-6);
}

TEST(SquareSolve, RejectsSingularAndNonSquare)
{
    Rng rng(23);
    const auto h = steering_vector(2, 0.25);
    const auto dup = ComplexMatrix::from_columns(std::vector<ComplexVector>{h, h});
    EXPECT_THROW(square_adjoint_solve(dup, ComplexVector{1.0, 1.0}), RankDeficientError);
    EXPECT_THROW(square_adjoint_solve(gen::gaussian_matrix(rng, 3, 2), ComplexVector(2, 1.0)), ContractViolation);
    EXPECT_THROW(square_rcond(gen::gaussian_matrix(rng, 3, 2)), ContractViolation);
}
