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

#ifndef BEAMSIM_LINALG_HPP
#define BEAMSIM_LINALG_HPP

// Small dense complex linear algebra (dimensions up to a few dozen).
// Everything here is a pure function over value types.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "beamsim/errors.hpp"

namespace beamsim
{

using cplx = std::complex<double>;
using ComplexVector = std::vector<cplx>;

// Hermitian check tolerance (elementwise) and the reciprocal-condition floor
// below which a Gram matrix is treated as singular.
inline constexpr double hermitian_tolerance = 1e-10;
inline constexpr double rcond_floor = 1e-12;

// Dense row-major complex matrix
class ComplexMatrix
{
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    static ComplexMatrix identity(std::size_t n)
    {
        ComplexMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = 1.0;
        return m;
    }

    // All columns must share one length
    static ComplexMatrix from_columns(std::span<const ComplexVector> columns)
    {
        if (columns.empty())
            return {};
        const std::size_t rows = columns.front().size();
        ComplexMatrix m(rows, columns.size());
        for (std::size_t c = 0; c < columns.size(); ++c)
        {
            if (columns[c].size() != rows)
                throw ContractViolation("from_columns: column " + std::to_string(c) + " has the wrong length");
            for (std::size_t r = 0; r < rows; ++r)
                m(r, c) = columns[c][r];
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    cplx &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const cplx &operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<cplx> data() { return data_; }
    std::span<const cplx> data() const { return data_; }

    ComplexVector column(std::size_t c) const
    {
        ComplexVector v(rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            v[r] = (*this)(r, c);
        return v;
    }

    ComplexMatrix adjoint() const
    {
        ComplexMatrix a(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c)
                a(c, r) = std::conj((*this)(r, c));
        return a;
    }

    ComplexMatrix &operator*=(cplx s)
    {
        for (auto &x : data_)
            x *= s;
        return *this;
    }

    bool operator==(const ComplexMatrix &) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

// ---------- vector helpers ----------

// a^H b
inline cplx inner(std::span<const cplx> a, std::span<const cplx> b)
{
    if (a.size() != b.size())
        throw ContractViolation("inner: length mismatch");
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += std::conj(a[i]) * b[i];
    return s;
}

inline double norm2(std::span<const cplx> v)
{
    double s = 0.0;
    for (const auto &x : v)
        s += std::norm(x);
    return std::sqrt(s);
}

inline bool all_finite(std::span<const cplx> v)
{
    return std::all_of(v.begin(), v.end(), [](const cplx &x)
                       { return std::isfinite(x.real()) && std::isfinite(x.imag()); });
}

inline ComplexVector normalized(std::span<const cplx> v)
{
    const double n = norm2(v);
    if (!(n > 0.0))
        throw ContractViolation("normalized: zero vector");
    ComplexVector out(v.begin(), v.end());
    for (auto &x : out)
        x /= n;
    return out;
}

inline ComplexVector basis_vector(std::size_t n, std::size_t i)
{
    ComplexVector e(n, 0.0);
    e.at(i) = 1.0;
    return e;
}

// Rotate the global phase so that the largest-magnitude entry is real and positive.
// Entries within a relative 1e-9 of the maximum count as tied; the first one wins,
// so vectors with flat magnitude profiles canonicalize on index 0.
inline ComplexVector canonical_phase(ComplexVector v)
{
    double peak = 0.0;
    for (const auto &x : v)
        peak = std::max(peak, std::abs(x));
    if (!(peak > 0.0))
        return v;
    std::size_t pick = 0;
    while (std::abs(v[pick]) < peak * (1.0 - 1e-9))
        ++pick;
    const cplx rot = std::conj(v[pick]) / std::abs(v[pick]);
    for (auto &x : v)
        x *= rot;
    return v;
}

// sqrt(1 - |a^H b|^2) for unit vectors; zero when they agree up to a phase
inline double angular_distance(std::span<const cplx> a, std::span<const cplx> b)
{
    const double c = std::min(1.0, std::abs(inner(a, b)) / (norm2(a) * norm2(b)));
    return std::sqrt(std::max(0.0, 1.0 - c * c));
}

// ---------- matrix helpers ----------

inline ComplexVector matvec(const ComplexMatrix &m, std::span<const cplx> x)
{
    if (m.cols() != x.size())
        throw ContractViolation("matvec: dimension mismatch");
    ComplexVector y(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r)
    {
        cplx s = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c)
            s += m(r, c) * x[c];
        y[r] = s;
    }
    return y;
}

// m^H x
inline ComplexVector adjoint_matvec(const ComplexMatrix &m, std::span<const cplx> x)
{
    if (m.rows() != x.size())
        throw ContractViolation("adjoint_matvec: dimension mismatch");
    ComplexVector y(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            y[c] += std::conj(m(r, c)) * x[r];
    return y;
}

inline ComplexMatrix matmul(const ComplexMatrix &a, const ComplexMatrix &b)
{
    if (a.cols() != b.rows())
        throw ContractViolation("matmul: dimension mismatch");
    ComplexMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k)
        {
            const cplx aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j)
                c(i, j) += aik * b(k, j);
        }
    return c;
}

// A^H A
inline ComplexMatrix gram(const ComplexMatrix &a)
{
    const std::size_t m = a.cols();
    ComplexMatrix g(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j)
        {
            cplx s = 0.0;
            for (std::size_t r = 0; r < a.rows(); ++r)
                s += std::conj(a(r, i)) * a(r, j);
            g(i, j) = s;
            g(j, i) = std::conj(s);
        }
    for (std::size_t i = 0; i < m; ++i)
        g(i, i) = g(i, i).real();
    return g;
}

// m += weight * v v^H
inline void add_outer(ComplexMatrix &m, std::span<const cplx> v, double weight = 1.0)
{
    if (!m.square() || m.rows() != v.size())
        throw ContractViolation("add_outer: dimension mismatch");
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j)
            m(i, j) += weight * v[i] * std::conj(v[j]);
}

inline bool all_finite(const ComplexMatrix &m) { return all_finite(m.data()); }

inline double frobenius_norm(const ComplexMatrix &m) { return norm2(m.data()); }

inline bool is_hermitian(const ComplexMatrix &m, double tol = hermitian_tolerance)
{
    if (!m.square())
        return false;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i; j < m.cols(); ++j)
            if (std::abs(m(i, j) - std::conj(m(j, i))) > tol)
                return false;
    return true;
}

// ---------- linear solve ----------

// Solve m x = rhs by Gaussian elimination with partial pivoting.
// Throws RankDeficientError on an exactly zero pivot.
inline ComplexVector solve(ComplexMatrix m, ComplexVector rhs)
{
    const std::size_t n = m.rows();
    if (!m.square() || rhs.size() != n)
        throw ContractViolation("solve: dimension mismatch");
    for (std::size_t k = 0; k < n; ++k)
    {
        std::size_t piv = k;
        double best = std::abs(m(k, k));
        for (std::size_t r = k + 1; r < n; ++r)
            if (std::abs(m(r, k)) > best)
            {
                best = std::abs(m(r, k));
                piv = r;
            }
        if (!(best > 0.0))
            throw RankDeficientError("solve: singular matrix");
        if (piv != k)
        {
            for (std::size_t c = 0; c < n; ++c)
                std::swap(m(k, c), m(piv, c));
            std::swap(rhs[k], rhs[piv]);
        }
        for (std::size_t r = k + 1; r < n; ++r)
        {
            const cplx f = m(r, k) / m(k, k);
            if (f == cplx(0.0))
                continue;
            for (std::size_t c = k; c < n; ++c)
                m(r, c) -= f * m(k, c);
            rhs[r] -= f * rhs[k];
        }
    }
    ComplexVector x(n);
    for (std::size_t k = n; k-- > 0;)
    {
        cplx s = rhs[k];
        for (std::size_t c = k + 1; c < n; ++c)
            s -= m(k, c) * x[c];
        x[k] = s / m(k, k);
    }
    return x;
}

// Solve m x = rhs for Hermitian positive-definite m (lower Cholesky factor).
// Throws RankDeficientError when a pivot is not positive.
inline ComplexVector cholesky_solve(const ComplexMatrix &m, ComplexVector rhs)
{
    const std::size_t n = m.rows();
    if (!m.square() || rhs.size() != n)
        throw ContractViolation("cholesky_solve: dimension mismatch");
    ComplexMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j)
    {
        double d = m(j, j).real();
        for (std::size_t k = 0; k < j; ++k)
            d -= std::norm(l(j, k));
        if (!(d > 0.0))
            throw RankDeficientError("cholesky_solve: matrix not positive definite");
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i)
        {
            cplx s = m(i, j);
            for (std::size_t k = 0; k < j; ++k)
                s -= l(i, k) * std::conj(l(j, k));
            l(i, j) = s / ljj;
        }
    }
    for (std::size_t i = 0; i < n; ++i) // L y = rhs
    {
        for (std::size_t k = 0; k < i; ++k)
            rhs[i] -= l(i, k) * rhs[k];
        rhs[i] /= l(i, i).real();
    }
    for (std::size_t i = n; i-- > 0;) // L^H x = y
    {
        for (std::size_t k = i + 1; k < n; ++k)
            rhs[i] -= std::conj(l(k, i)) * rhs[k];
        rhs[i] /= l(i, i).real();
    }
    return rhs;
}

// ---------- Hermitian eigendecomposition ----------

struct HermitianEigen
{
    std::vector<double> values; // descending
    ComplexMatrix vectors;      // column k pairs with values[k]
};

// Cyclic complex Jacobi rotations. Input must be Hermitian.
inline HermitianEigen hermitian_eigen(ComplexMatrix a)
{
    const std::size_t n = a.rows();
    if (!a.square())
        throw ContractViolation("hermitian_eigen: matrix not square");
    ComplexMatrix v = ComplexMatrix::identity(n);

    const double scale = frobenius_norm(a);
    for (int sweep = 0; sweep < 64 && scale > 0.0; ++sweep)
    {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                off += std::norm(a(p, q));
        if (std::sqrt(2.0 * off) <= 1e-15 * scale)
            break;

        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
            {
                const double g = std::abs(a(p, q));
                if (g <= 1e-300)
                    continue;
                const cplx phase = a(p, q) / g; // e^{j phi}
                const double app = a(p, p).real(), aqq = a(q, q).real();
                const double theta = 0.5 * std::atan2(2.0 * g, aqq - app);
                const double c = std::cos(theta), s = std::sin(theta);
                const cplx sp = s * std::conj(phase); // s e^{-j phi}

                // columns: A <- A V
                for (std::size_t k = 0; k < n; ++k)
                {
                    const cplx akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sp * akq;
                    a(k, q) = s * akp + c * std::conj(phase) * akq;
                    const cplx vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - sp * vkq;
                    v(k, q) = s * vkp + c * std::conj(phase) * vkq;
                }
                // rows: A <- V^H A
                for (std::size_t k = 0; k < n; ++k)
                {
                    const cplx apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * phase * aqk;
                    a(q, k) = s * apk + c * phase * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
            }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j)
                     { return a(i, i).real() > a(j, j).real(); });

    HermitianEigen out;
    out.values.resize(n);
    out.vectors = ComplexMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k)
    {
        out.values[k] = a(order[k], order[k]).real();
        for (std::size_t r = 0; r < n; ++r)
            out.vectors(r, k) = v(r, order[k]);
    }
    return out;
}

// Exact principal eigenvector of a Hermitian PSD matrix (phase-canonical)
inline ComplexVector principal_eigvec(const ComplexMatrix &m)
{
    if (!is_hermitian(m))
        throw ContractViolation("principal_eigvec: matrix not Hermitian");
    const auto eig = hermitian_eigen(m);
    return canonical_phase(normalized(eig.vectors.column(0)));
}

// Principal eigenvector of sum_k c_k c_k^H given the columns c_k of `columns`.
// When there are fewer columns than rows the small Gram problem is solved instead,
// which gives the same eigenvector.
inline ComplexVector principal_eigvec_of_outer_sum(const ComplexMatrix &columns)
{
    const std::size_t n = columns.rows(), m = columns.cols();
    if (m == 0 || n == 0)
        throw ContractViolation("principal_eigvec_of_outer_sum: empty input");
    if (m == 1)
    {
        const auto c = columns.column(0);
        if (!(norm2(c) > 0.0))
            return basis_vector(n, 0);
        return canonical_phase(normalized(c));
    }
    if (m < n)
    {
        const auto eig = hermitian_eigen(gram(columns));
        const auto u = matvec(columns, eig.vectors.column(0));
        if (!(norm2(u) > 0.0))
            return basis_vector(n, 0);
        return canonical_phase(normalized(u));
    }
    ComplexMatrix outer(n, n);
    for (std::size_t k = 0; k < m; ++k)
        add_outer(outer, columns.column(k));
    if (!(frobenius_norm(outer) > 0.0))
        return basis_vector(n, 0);
    return canonical_phase(normalized(hermitian_eigen(outer).vectors.column(0)));
}

// ---------- power method ----------

struct PowerResult
{
    ComplexVector vector;    // unit norm, canonical phase
    bool degenerate = false; // seed (numerically) orthogonal to the range of m^K
};

// normalize(m^K seed). Falls back to e_1 with the degenerate flag when m^K seed
// vanishes relative to ||m||_F^K ||seed||.
inline PowerResult principal_eigvec_power(const ComplexMatrix &m, std::span<const cplx> seed, std::size_t power)
{
    if (!m.square())
        throw ContractViolation("principal_eigvec_power: matrix not square");
    if (seed.size() != m.rows())
        throw ContractViolation("principal_eigvec_power: seed length mismatch");
    if (power < 1)
        throw ContractViolation("principal_eigvec_power: power must be >= 1");
    if (!all_finite(m) || !all_finite(seed))
        throw ContractViolation("principal_eigvec_power: non-finite input");
    if (!is_hermitian(m))
        throw ContractViolation("principal_eigvec_power: matrix not Hermitian");
    for (std::size_t i = 0; i < m.rows(); ++i)
        if (m(i, i).real() < -1e-12)
            throw ContractViolation("principal_eigvec_power: negative diagonal, matrix not PSD");

    const double mnorm = frobenius_norm(m);
    const double seed_norm = norm2(seed);
    const auto fallback = [&]
    { return PowerResult{basis_vector(m.rows(), 0), true}; };
    if (!(mnorm > 0.0) || !(seed_norm > 0.0))
        return fallback();

    // Each step is rescaled by ||m||_F so the relative size of m^K seed can be
    // tracked without overflow.
    ComplexVector v(seed.begin(), seed.end());
    for (auto &x : v)
        x /= seed_norm;
    double log_rel = 0.0;
    for (std::size_t k = 0; k < power; ++k)
    {
        v = matvec(m, v);
        const double nv = norm2(v);
        if (!(nv > 0.0))
            return fallback();
        log_rel += std::log(nv / mnorm);
        for (auto &x : v)
            x /= nv;
    }
    if (log_rel < std::log(1e-14))
        return fallback();
    return PowerResult{canonical_phase(std::move(v)), false};
}

// ---------- pseudo-inverse ----------

// lambda_min / lambda_max of a Hermitian PSD matrix (0 when singular)
inline double hermitian_rcond(const ComplexMatrix &g)
{
    if (g.rows() == 0)
        return 0.0;
    const auto eig = hermitian_eigen(g);
    const double hi = eig.values.front(), lo = eig.values.back();
    if (!(hi > 0.0) || !(lo > 0.0))
        return 0.0;
    return lo / hi;
}

// x = A (A^H A)^{-1} rhs, the minimum-norm solution of A^H x = rhs.
// One or two steps of iterative refinement keep the residual near machine precision
// even for badly conditioned steering matrices.
inline ComplexVector gram_right_pseudo_apply(const ComplexMatrix &a, std::span<const cplx> rhs)
{
    const std::size_t n = a.rows(), m = a.cols();
    if (rhs.size() != m)
        throw ContractViolation("gram_right_pseudo_apply: rhs length must equal the column count");
    if (m == 0)
        throw ContractViolation("gram_right_pseudo_apply: no columns");
    if (!all_finite(a) || !all_finite(rhs))
        throw ContractViolation("gram_right_pseudo_apply: non-finite input");
    if (m > n)
        throw RankDeficientError("gram_right_pseudo_apply: " + std::to_string(m) + " columns exceed " +
                                 std::to_string(n) + " rows");
    const ComplexMatrix g = gram(a);
    const double rc = hermitian_rcond(g);
    if (rc < rcond_floor)
        throw RankDeficientError("gram_right_pseudo_apply: Gram matrix reciprocal condition " + std::to_string(rc) +
                                 " below floor");

    ComplexVector x = matvec(a, solve(g, ComplexVector(rhs.begin(), rhs.end())));
    const double rhs_norm = norm2(rhs);
    for (int step = 0; step < 3; ++step)
    {
        auto res = adjoint_matvec(a, x);
        for (std::size_t i = 0; i < m; ++i)
            res[i] = rhs[i] - res[i];
        if (norm2(res) <= 1e-14 * rhs_norm)
            break;
        const auto dx = matvec(a, solve(g, res));
        for (std::size_t i = 0; i < n; ++i)
            x[i] += dx[i];
    }
    return x;
}

// sigma_min / sigma_max of a square matrix, from the eigenvalues +-sigma_i of the
// Hermitian embedding [[0, A], [A^H, 0]]. Unlike the Gram route this resolves
// ratios down to about machine epsilon rather than its square root.
inline double square_rcond(const ComplexMatrix &a)
{
    if (!a.square() || a.rows() == 0)
        throw ContractViolation("square_rcond: need a non-empty square matrix");
    const std::size_t n = a.rows();
    ComplexMatrix e(2 * n, 2 * n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
        {
            e(r, n + c) = a(r, c);
            e(n + c, r) = std::conj(a(r, c));
        }
    const auto eig = hermitian_eigen(e);
    // the n largest eigenvalues are the singular values
    const double hi = eig.values.front(), lo = eig.values[n - 1];
    if (!(hi > 0.0) || !(lo > 0.0))
        return 0.0;
    return lo / hi;
}

// x with A^H x = rhs for square A, rejected below the reciprocal-condition floor
inline ComplexVector square_adjoint_solve(const ComplexMatrix &a, std::span<const cplx> rhs)
{
    const std::size_t n = a.rows();
    if (!a.square() || rhs.size() != n)
        throw ContractViolation("square_adjoint_solve: dimension mismatch");
    if (!all_finite(a) || !all_finite(rhs))
        throw ContractViolation("square_adjoint_solve: non-finite input");
    const double rc = square_rcond(a);
    if (rc < rcond_floor)
        throw RankDeficientError("square_adjoint_solve: reciprocal condition " + std::to_string(rc) + " below floor");
    ComplexMatrix ah(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            ah(r, c) = std::conj(a(c, r));
    ComplexVector x = solve(ah, ComplexVector(rhs.begin(), rhs.end()));
    const double rhs_norm = norm2(rhs);
    for (int step = 0; step < 3; ++step)
    {
        auto res = adjoint_matvec(a, x);
        for (std::size_t i = 0; i < n; ++i)
            res[i] = rhs[i] - res[i];
        if (norm2(res) <= 1e-14 * rhs_norm)
            break;
        const auto dx = solve(ah, res);
        for (std::size_t i = 0; i < n; ++i)
            x[i] += dx[i];
    }
    return x;
}

// sigma_max / sigma_min of the input, via the Gram eigenvalues.
// Rank deficiency (Gram rcond below the floor, or more columns than rows) gives +infinity.
inline double condition_ratio(const ComplexMatrix &columns)
{
    if (columns.cols() == 0 || columns.cols() > columns.rows())
        return std::numeric_limits<double>::infinity();
    const auto eig = hermitian_eigen(gram(columns));
    const double hi = eig.values.front(), lo = eig.values.back();
    if (!(hi > 0.0) || !(lo > 0.0) || lo / hi < rcond_floor)
        return std::numeric_limits<double>::infinity();
    return std::sqrt(hi / lo);
}

} // namespace beamsim

#endif
