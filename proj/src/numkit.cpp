#include <gk/numkit.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gk {

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m))
{
    if (m_.rows() != m_.cols()) {
        std::ostringstream os;
        os << "SymMatrix: expected a square matrix, got " << m_.rows() << "x" << m_.cols();
        throw ContractError(os.str());
    }
    if (!m_.allFinite()) {
        throw ContractError("SymMatrix: non-finite entry");
    }
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    for (Index j = 0; j < m_.cols(); ++j) {
        for (Index i = j + 1; i < m_.rows(); ++i) {
            if (std::abs(m_(i, j) - m_(j, i)) > 1e-12 * scale) {
                std::ostringstream os;
                os << "SymMatrix: not symmetric, entry (" << j + 1 << "," << i + 1 << ") = " << m_(j, i)
                   << " but (" << i + 1 << "," << j + 1 << ") = " << m_(i, j) << " (1-based)";
                throw ContractError(os.str());
            }
        }
    }
    m_ = 0.5 * (m_ + m_.transpose()).eval();
}

SymMatrix SymMatrix::symmetrized(const Matrix& m)
{
    if (m.rows() != m.cols()) {
        throw ContractError("SymMatrix::symmetrized: matrix is not square");
    }
    return SymMatrix(Matrix(0.5 * (m + m.transpose())), unchecked_tag{});
}

SymMatrix SymMatrix::identity(Index dim)
{
    return SymMatrix(Matrix::Identity(dim, dim), unchecked_tag{});
}

double SymMatrix::max_abs() const
{
    return m_.size() == 0 ? 0.0 : m_.cwiseAbs().maxCoeff();
}

EigenDecomposition sym_eigen(const SymMatrix& m)
{
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m.mat());
    if (solver.info() != Eigen::Success) {
        throw NumericError("sym_eigen: eigendecomposition did not converge");
    }
    // Eigen returns ascending order.
    EigenDecomposition out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

double min_eigenvalue(const SymMatrix& m)
{
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m.mat(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericError("min_eigenvalue: eigendecomposition did not converge");
    }
    return solver.eigenvalues()(0);
}

SymMatrix psd_sqrt(const SymMatrix& m, double floor)
{
    if (floor < 0.0) {
        throw ContractError("psd_sqrt: floor must be nonnegative");
    }
    const auto eig = sym_eigen(m);
    const double band = -1e-8 * std::max(m.max_abs(), 1e-300);
    if (eig.values.size() > 0 && eig.values.minCoeff() < band) {
        std::ostringstream os;
        os << "psd_sqrt: matrix is not PSD (smallest eigenvalue " << eig.values.minCoeff() << ")";
        throw NotPsdError(os.str());
    }
    const Vector roots = eig.values.unaryExpr([floor](double v) { return std::sqrt(std::max(v, floor)); });
    return SymMatrix::symmetrized(eig.vectors * roots.asDiagonal() * eig.vectors.transpose());
}

SymMatrix psd_clamp(const SymMatrix& m, double floor)
{
    const auto eig = sym_eigen(m);
    const Vector clamped = eig.values.cwiseMax(floor);
    return SymMatrix::symmetrized(eig.vectors * clamped.asDiagonal() * eig.vectors.transpose());
}

Matrix cholesky_lower(const SymMatrix& m, std::string_view what)
{
    Eigen::LLT<Matrix> llt(m.mat());
    if (llt.info() != Eigen::Success) {
        std::ostringstream os;
        os << what << " is singular or indefinite; add a small ridge (jitter) to its diagonal";
        throw SingularMatrixError(os.str());
    }
    return llt.matrixL();
}

SymMatrix spd_inverse(const SymMatrix& m, std::string_view what)
{
    Eigen::LLT<Matrix> llt(m.mat());
    if (llt.info() != Eigen::Success) {
        std::ostringstream os;
        os << what << " is singular or indefinite; add a small ridge (jitter) to its diagonal";
        throw SingularMatrixError(os.str());
    }
    return SymMatrix::symmetrized(llt.solve(Matrix::Identity(m.dim(), m.dim())));
}

bool is_psd(const Matrix& m, double tol)
{
    Matrix shifted = m;
    shifted.diagonal().array() += tol;
    Eigen::LLT<Matrix> llt(shifted);
    return llt.info() == Eigen::Success;
}

SymMatrix ar1_correlation(Index p, double rho)
{
    Matrix s(p, p);
    for (Index i = 0; i < p; ++i) {
        for (Index j = 0; j < p; ++j) {
            s(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
        }
    }
    return SymMatrix(std::move(s));
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view s)
{
    // FNV-1a, 64 bit
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(mix_seed(seed, stream))
{}

double RngStream::normal()
{
    return normal_(engine_);
}

double RngStream::uniform()
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

std::uint64_t RngStream::below(std::uint64_t n)
{
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
}

Vector RngStream::normal_vector(Index n)
{
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
        v(i) = normal();
    }
    return v;
}

RngStream RngStream::derive(std::uint64_t tag) const
{
    return RngStream(seed_, splitmix64(stream_ ^ splitmix64(tag)));
}

Matrix gaussian_matrix(RngStream& rng, Index rows, Index cols)
{
    if (rows < 1 || cols < 1) {
        throw ContractError("gaussian_matrix: rows and cols must be positive");
    }
    Matrix out(rows, cols);
    // Row-major fill so a prefix of rows is stable when cols is fixed.
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            out(i, j) = rng.normal();
        }
    }
    return out;
}

} // namespace gk
