#pragma once

// Independent reference computations used by the unit tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <gk/numkit.hpp>

namespace oracle {

using gk::Index;
using gk::Matrix;
using gk::Vector;

inline Matrix random_spd(gk::RngStream& rng, Index p, double ridge = 0.5)
{
    const Matrix a = gk::gaussian_matrix(rng, p, p);
    Matrix m = a * a.transpose() / static_cast<double>(p);
    m.diagonal().array() += ridge;
    return m;
}

inline Matrix to_correlation(const Matrix& m)
{
    const Vector d = m.diagonal().cwiseSqrt().cwiseInverse();
    Matrix c = d.asDiagonal() * m * d.asDiagonal();
    c.diagonal().setOnes();
    return 0.5 * (c + c.transpose());
}

/// Brute-force knockoff+ threshold: tries every |W_j| > 0.
inline double brute_threshold(const std::vector<double>& w, double q)
{
    double best = std::numeric_limits<double>::infinity();
    for (double cand : w) {
        const double t = std::abs(cand);
        if (t == 0.0) {
            continue;
        }
        double pos = 0.0;
        double neg = 0.0;
        for (double v : w) {
            pos += v >= t;
            neg += v <= -t;
        }
        if ((1.0 + neg) / std::max(pos, 1.0) <= q) {
            best = std::min(best, t);
        }
    }
    return best;
}

/// Projected (proximal) gradient for 1/2 b'Cb - d'b + lambda |b|_1 + gamma |b|^2.
inline Vector proximal_gradient(const Matrix& c, const Vector& d, double lambda, double gamma, int iters = 200000)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    const double lip = es.eigenvalues().maxCoeff() + 2.0 * gamma;
    const double step = 1.0 / lip;
    Vector b = Vector::Zero(d.size());
    Vector prev = b;
    Vector y = b;
    double t = 1.0;
    for (int it = 0; it < iters; ++it) {
        const Vector g = c * y - d + 2.0 * gamma * y;
        Vector z = y - step * g;
        for (Index j = 0; j < z.size(); ++j) {
            const double a = std::abs(z(j)) - step * lambda;
            z(j) = a > 0.0 ? std::copysign(a, z(j)) : 0.0;
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = z + ((t - 1.0) / tn) * (z - prev);
        prev = z;
        t = tn;
        b = z;
    }
    return b;
}

inline double lasso_objective(const Matrix& c, const Vector& d, double lambda, double gamma, const Vector& b)
{
    return 0.5 * b.dot(c * b) - d.dot(b) + lambda * b.lpNorm<1>() + gamma * b.squaredNorm();
}

inline double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

/// Kolmogorov-Smirnov statistic of a sample against Uniform(0,1).
inline double ks_uniform(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        d = std::max({d, (i + 1) / n - v[i], v[i] - i / n});
    }
    return d;
}

/// Exhaustive (kappa, tau) rule with its own argmax and median.
inline std::vector<Index> brute_multi(const Matrix& z, double q)
{
    const Index n = z.rows();
    const int m = static_cast<int>(z.cols()) - 1;
    std::vector<int> kappa(n);
    std::vector<double> tau(n);
    for (Index j = 0; j < n; ++j) {
        int best = 0;
        for (int c = 1; c <= m; ++c) {
            if (z(j, c) > z(j, best)) {
                best = c;
            }
        }
        std::vector<double> rest;
        for (int c = 0; c <= m; ++c) {
            if (c != best) {
                rest.push_back(z(j, c));
            }
        }
        kappa[j] = best;
        tau[j] = z(j, best) - median(rest);
    }
    double t_best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
        const double t = tau[i];
        if (!(t > 0.0)) {
            continue;
        }
        double ko = 0.0;
        double orig = 0.0;
        for (Index j = 0; j < n; ++j) {
            if (tau[j] >= t) {
                (kappa[j] == 0 ? orig : ko) += 1.0;
            }
        }
        if ((1.0 / m + ko / m) / std::max(orig, 1.0) <= q) {
            t_best = std::min(t_best, t);
        }
    }
    std::vector<Index> sel;
    for (Index j = 0; j < n; ++j) {
        if (kappa[j] == 0 && tau[j] >= t_best) {
            sel.push_back(j);
        }
    }
    return sel;
}

} // namespace oracle
