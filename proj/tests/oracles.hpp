// SPDX-License-Identifier: Apache-2.0
// Test-only reference implementations, independent of the library code:
// high-precision Bessel evaluations, a long-double Hermitian eigensolver,
// a two-loop attention reference and a central-difference helper.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace oracle
{
    // 60-term power series for J0, evaluated in extended precision. The
    // terms peak near k = x/2, so the truncation and rounding error stay
    // below 1e-12 for x in [0, 20].
    inline long double j0_series(long double x)
    {
        const long double q = -(x / 2.0L) * (x / 2.0L);
        long double term = 1.0L;
        long double sum = 1.0L;
        for (int k = 1; k < 60; ++k)
        {
            term *= q / (static_cast<long double>(k) * static_cast<long double>(k));
            sum += term;
        }
        return sum;
    }

    // Integral form J0(x) = (1/pi) * integral_0^pi cos(x sin t) dt via
    // composite Simpson in extended precision. Stays accurate for the
    // larger arguments where the series loses digits to cancellation.
    inline long double j0_integral(long double x)
    {
        const long double pi = 3.14159265358979323846264338327950288L;
        const int n = 1 << 14; // even interval count
        const long double h = pi / n;
        long double sum = std::cos(x * std::sin(0.0L)) + std::cos(x * std::sin(pi));
        for (int i = 1; i < n; ++i)
        {
            const long double t = h * i;
            sum += (i % 2 ? 4.0L : 2.0L) * std::cos(x * std::sin(t));
        }
        return sum * h / 3.0L / pi;
    }

    // Eigenvalues of a Hermitian matrix by cyclic complex Jacobi sweeps in
    // extended precision; returns them sorted descending. Row-major input.
    inline std::vector<long double> hermitian_eigenvalues(std::vector<std::complex<long double>> a,
                                                          int n)
    {
        using cld = std::complex<long double>;
        auto at = [&](int i, int j) -> cld & { return a[static_cast<std::size_t>(i) * n + j]; };

        for (int sweep = 0; sweep < 100; ++sweep)
        {
            long double off = 0.0L;
            long double total = 0.0L;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                {
                    const long double e = std::norm(at(i, j));
                    total += e;
                    if (i != j)
                        off += e;
                }
            if (total == 0.0L || off <= total * 1e-40L)
                break;

            for (int p = 0; p < n - 1; ++p)
                for (int q = p + 1; q < n; ++q)
                {
                    const cld apq = at(p, q);
                    const long double mag = std::abs(apq);
                    if (mag == 0.0L)
                        continue;
                    // Phase factor makes the (p,q) entry real, then a real
                    // Jacobi rotation annihilates it.
                    const cld phase = apq / mag;
                    const long double app = at(p, p).real();
                    const long double aqq = at(q, q).real();
                    const long double tau = (aqq - app) / (2.0L * mag);
                    const long double t =
                        (tau >= 0.0L ? 1.0L : -1.0L) / (std::abs(tau) + std::sqrt(1.0L + tau * tau));
                    const long double c = 1.0L / std::sqrt(1.0L + t * t);
                    const long double s = t * c;
                    const cld sq = s * std::conj(phase); // multiplies column q entries
                    for (int i = 0; i < n; ++i)
                    {
                        const cld aip = at(i, p);
                        const cld aiq = at(i, q);
                        at(i, p) = c * aip - sq * aiq;
                        at(i, q) = s * aip + c * std::conj(phase) * aiq;
                    }
                    for (int j = 0; j < n; ++j)
                    {
                        const cld apj = at(p, j);
                        const cld aqj = at(q, j);
                        at(p, j) = c * apj - s * phase * aqj;
                        at(q, j) = s * apj + c * phase * aqj;
                    }
                }
        }

        std::vector<long double> ev(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            ev[static_cast<std::size_t>(i)] = at(i, i).real();
        std::sort(ev.begin(), ev.end(), std::greater<long double>());
        return ev;
    }

    // Smallest rank whose leading-eigenvalue mass reaches the threshold.
    inline int min_rank(const std::vector<long double> &eigs_desc, long double threshold)
    {
        long double total = 0.0L;
        for (const long double e : eigs_desc)
            total += e;
        long double prefix = 0.0L;
        for (std::size_t r = 0; r < eigs_desc.size(); ++r)
        {
            prefix += eigs_desc[r];
            if (prefix >= threshold * total)
                return static_cast<int>(r) + 1;
        }
        return static_cast<int>(eigs_desc.size());
    }

    inline long double retained_ratio(const std::vector<long double> &eigs_desc, int rank)
    {
        long double total = 0.0L;
        long double prefix = 0.0L;
        for (std::size_t i = 0; i < eigs_desc.size(); ++i)
        {
            total += eigs_desc[i];
            if (static_cast<int>(i) < rank)
                prefix += eigs_desc[i];
        }
        return total > 0.0L ? prefix / total : 1.0L;
    }

    // Row-major Hermitian copy of an Eigen matrix in extended precision.
    inline std::vector<std::complex<long double>> to_extended(const Eigen::MatrixXcd &m)
    {
        std::vector<std::complex<long double>> out(static_cast<std::size_t>(m.rows()) *
                                                   static_cast<std::size_t>(m.cols()));
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                out[static_cast<std::size_t>(i) * m.cols() + j] = {m(i, j).real(), m(i, j).imag()};
        return out;
    }

    // Scaled dot-product attention written as explicit loops.
    inline Eigen::MatrixXd naive_attention(const Eigen::MatrixXd &queries,
                                           const Eigen::MatrixXd &keys,
                                           const Eigen::MatrixXd &values)
    {
        const Eigen::Index nq = queries.rows();
        const Eigen::Index nk = keys.rows();
        const Eigen::Index dk = queries.cols();
        const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
        Eigen::MatrixXd out(nq, values.cols());
        for (Eigen::Index i = 0; i < nq; ++i)
        {
            std::vector<double> score(static_cast<std::size_t>(nk));
            double smax = -std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < nk; ++j)
            {
                double dot = 0.0;
                for (Eigen::Index d = 0; d < dk; ++d)
                    dot += queries(i, d) * keys(j, d);
                score[static_cast<std::size_t>(j)] = dot * scale;
                smax = std::max(smax, dot * scale);
            }
            double denom = 0.0;
            for (Eigen::Index j = 0; j < nk; ++j)
            {
                score[static_cast<std::size_t>(j)] = std::exp(score[static_cast<std::size_t>(j)] - smax);
                denom += score[static_cast<std::size_t>(j)];
            }
            for (Eigen::Index c = 0; c < values.cols(); ++c)
            {
                double acc = 0.0;
                for (Eigen::Index j = 0; j < nk; ++j)
                    acc += score[static_cast<std::size_t>(j)] / denom * values(j, c);
                out(i, c) = acc;
            }
        }
        return out;
    }

    // Central difference of a scalar functional with the step scaled to the
    // parameter magnitude.
    template <typename F>
    double central_difference(double &param, F &&loss)
    {
        const double saved = param;
        const double h = 1e-5 * std::max(1.0, std::abs(saved));
        param = saved + h;
        const double up = loss();
        param = saved - h;
        const double down = loss();
        param = saved;
        return (up - down) / (2.0 * h);
    }

    // Relative gradient agreement with an absolute floor for quadrature
    // noise in the difference quotient.
    inline bool grad_close(double analytic, double numeric)
    {
        const double diff = std::abs(analytic - numeric);
        if (diff <= 1e-7)
            return true;
        return diff <= 1e-4 * std::max(std::abs(analytic), std::abs(numeric));
    }
}
