#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

#include <gk/errors.hpp>

namespace gk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/**
 * Dense symmetric matrix with checked construction.
 *
 * Construction validates that every entry is finite and that the matrix is
 * symmetric to within 1e-12 relative to its largest entry. The stored matrix
 * is exactly symmetrized so downstream factorizations see a clean input.
 */
class SymMatrix
{
public:
    SymMatrix() = default;
    explicit SymMatrix(Matrix m);

    /// Symmetrizes (m + m^T)/2 without the tolerance check. For matrices that
    /// are symmetric by construction but carry roundoff.
    static SymMatrix symmetrized(const Matrix& m);

    static SymMatrix identity(Index dim);

    Index dim() const { return m_.rows(); }
    const Matrix& mat() const { return m_; }
    double operator()(Index i, Index j) const { return m_(i, j); }
    double max_abs() const;

private:
    struct unchecked_tag {};
    SymMatrix(Matrix m, unchecked_tag) : m_(std::move(m)) {}

    Matrix m_;
};

/// Eigenpairs with eigenvalues sorted in descending order.
struct EigenDecomposition
{
    Vector values;
    Matrix vectors;
};

EigenDecomposition sym_eigen(const SymMatrix& m);

double min_eigenvalue(const SymMatrix& m);

/// U diag(sqrt(max(lambda, floor))) U^T. Eigenvalues below
/// -1e-8 * max|m| are rejected with NotPsdError.
SymMatrix psd_sqrt(const SymMatrix& m, double floor = 0.0);

/// Eigenvalue clamp: every eigenvalue below `floor` is raised to `floor`.
SymMatrix psd_clamp(const SymMatrix& m, double floor = 0.0);

/// Inverse of a symmetric positive definite matrix; throws
/// SingularMatrixError when the Cholesky factorization fails.
SymMatrix spd_inverse(const SymMatrix& m, std::string_view what = "matrix");

/// Lower Cholesky factor; throws SingularMatrixError on failure.
Matrix cholesky_lower(const SymMatrix& m, std::string_view what = "matrix");

/// True if m + tol * I admits a Cholesky factorization.
bool is_psd(const Matrix& m, double tol);

/// AR(1) correlation rho^|i-j|.
SymMatrix ar1_correlation(Index p, double rho);

/**
 * Seedable Gaussian source. Identical (seed, stream) pairs replay identical
 * sequences; different stream ids decorrelate through a splitmix64 mix.
 */
class RngStream
{
public:
    RngStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    double normal();
    double uniform();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    Vector normal_vector(Index n);

    /// Independent child stream keyed by `tag`.
    RngStream derive(std::uint64_t tag) const;

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

Matrix gaussian_matrix(RngStream& rng, Index rows, Index cols);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_string(std::string_view s);

} // namespace gk
