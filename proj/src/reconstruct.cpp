#include <gk/reconstruct.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gk {

SymMatrix FullSummaryStats::bordered() const
{
    const Index p = features();
    Matrix b(p + 1, p + 1);
    b.topLeftCorner(p, p) = xtx.mat();
    b.topRightCorner(p, 1) = xty;
    b.bottomLeftCorner(1, p) = xty.transpose();
    b(p, p) = yty;
    return SymMatrix::symmetrized(b);
}

void FullSummaryStats::validate() const
{
    if (xty.size() != xtx.dim()) {
        throw ContractError("FullSummaryStats: xty length does not match xtx");
    }
    if (n < 1) {
        throw ContractError("FullSummaryStats: n must be at least 1");
    }
    if (!(yty >= 0.0) || !std::isfinite(yty) || !xty.allFinite()) {
        throw InvalidSummaryError("FullSummaryStats: yty must be finite and nonnegative, xty finite");
    }
}

FullSummaryStats FullSummaryStats::from_data(const Matrix& x, const Vector& y)
{
    if (x.rows() != y.size()) {
        throw ContractError("FullSummaryStats::from_data: row count mismatch");
    }
    FullSummaryStats st;
    st.xtx = SymMatrix::symmetrized(x.transpose() * x);
    st.xty = x.transpose() * y;
    st.yty = y.squaredNorm();
    st.n = x.rows();
    return st;
}

SurrogateData reconstruct_surrogate(const FullSummaryStats& stats)
{
    stats.validate();
    const Index p = stats.features();
    const SymMatrix gram = stats.bordered();
    const auto eig = sym_eigen(gram);
    const double scale = std::max(gram.max_abs(), 1e-300);
    if (eig.values.minCoeff() < -1e-6 * scale) {
        std::ostringstream os;
        os << "reconstruct_surrogate: bordered Gram has eigenvalue " << eig.values.minCoeff()
           << " (scale " << scale << "); summary statistics are inconsistent";
        throw InvalidSummaryError(os.str());
    }
    const Index rank_rows = std::min<Index>(stats.n, p + 1);
    const Vector roots = eig.values.head(rank_rows).cwiseMax(0.0).cwiseSqrt();
    // rows = D^{1/2} U^T restricted to the leading eigenpairs
    Matrix rows = roots.asDiagonal() * eig.vectors.leftCols(rank_rows).transpose();

    Matrix full = Matrix::Zero(std::max(stats.n, rank_rows), p + 1);
    full.topRows(rank_rows) = rows;
    SurrogateData out;
    out.x_check = full.leftCols(p);
    out.y_check = full.col(p);
    return out;
}

SymMatrix assemble_gram(const Matrix& x_check, const Matrix& x_knock, const Vector& y_check)
{
    if (x_check.rows() != x_knock.rows() || x_check.rows() != y_check.size()) {
        throw ContractError("assemble_gram: row counts disagree");
    }
    const Index p1 = x_check.cols();
    const Index p2 = x_knock.cols();
    Matrix a(x_check.rows(), p1 + p2 + 1);
    a.leftCols(p1) = x_check;
    a.middleCols(p1, p2) = x_knock;
    a.col(p1 + p2) = y_check;
    Matrix g(a.cols(), a.cols());
    g.setZero();
    g.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
    const Matrix full = g.selfadjointView<Eigen::Lower>();
    return SymMatrix::symmetrized(full);
}

} // namespace gk
