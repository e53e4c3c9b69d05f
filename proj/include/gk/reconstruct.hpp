#pragma once

#include <gk/numkit.hpp>

namespace gk {

/// X^T X, X^T Y, ||Y||^2 and n. The bordered matrix [[xtx, xty], [xty^T, yty]]
/// must be PSD to -1e-6 relative to its scale.
struct FullSummaryStats
{
    SymMatrix xtx;
    Vector xty;
    double yty = 0.0;
    Index n = 0;

    Index features() const { return xtx.dim(); }
    SymMatrix bordered() const;
    void validate() const;

    static FullSummaryStats from_data(const Matrix& x, const Vector& y);
};

/// Surrogate rows whose Gram matrix reproduces the bordered summary Gram.
struct SurrogateData
{
    Matrix x_check;
    Vector y_check;
};

/**
 * Eigen route: bordered Gram = U diag(d) U^T with d descending.
 * If n >= p+1, rows are diag(sqrt d) U^T padded with n-p-1 zero rows;
 * otherwise only the top n eigenpairs are used (n rows).
 */
SurrogateData reconstruct_surrogate(const FullSummaryStats& stats);

/// [A y]^T [A y] for A = [x_check, x_knock].
SymMatrix assemble_gram(const Matrix& x_check, const Matrix& x_knock, const Vector& y_check);

} // namespace gk
