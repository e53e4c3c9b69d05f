#include <gk/knockoff.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gk {

SymMatrix KnockoffModel::joint_gram() const
{
    const Index p = features();
    const Index total = p * (copies + 1);
    const Matrix off = sigma.mat() - d;
    Matrix g(total, total);
    for (int a = 0; a <= copies; ++a) {
        for (int b = 0; b <= copies; ++b) {
            g.block(a * p, b * p, p, p) = (a == b) ? sigma.mat() : off;
        }
    }
    return SymMatrix::symmetrized(g);
}

GroupPartition::GroupPartition(std::vector<int> assignments) : assignments_(std::move(assignments))
{
    if (assignments_.empty()) {
        throw ContractError("GroupPartition: empty assignment");
    }
    groups_ = *std::max_element(assignments_.begin(), assignments_.end());
    if (*std::min_element(assignments_.begin(), assignments_.end()) < 1) {
        throw ContractError("GroupPartition: group ids must start at 1");
    }
    members_.assign(static_cast<std::size_t>(groups_), {});
    for (std::size_t j = 0; j < assignments_.size(); ++j) {
        members_[static_cast<std::size_t>(assignments_[j] - 1)].push_back(static_cast<Index>(j));
    }
    for (int g = 1; g <= groups_; ++g) {
        if (members(g).empty()) {
            std::ostringstream os;
            os << "GroupPartition: group " << g << " is empty (ids must be contiguous)";
            throw ContractError(os.str());
        }
    }
}

GroupPartition GroupPartition::singletons(Index p)
{
    std::vector<int> a(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) {
        a[static_cast<std::size_t>(j)] = static_cast<int>(j + 1);
    }
    return GroupPartition(std::move(a));
}

GroupPartition GroupPartition::contiguous(Index p, Index size)
{
    if (size < 1) {
        throw ContractError("GroupPartition::contiguous: size must be positive");
    }
    std::vector<int> a(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) {
        a[static_cast<std::size_t>(j)] = static_cast<int>(j / size + 1);
    }
    return GroupPartition(std::move(a));
}

double copy_factor(int copies)
{
    if (copies < 1) {
        throw ContractError("knockoff copies must be at least 1");
    }
    return static_cast<double>(copies + 1) / static_cast<double>(copies);
}

void require_unit_diagonal(const SymMatrix& sigma, const char* where)
{
    for (Index j = 0; j < sigma.dim(); ++j) {
        if (std::abs(sigma(j, j) - 1.0) > 1e-8) {
            std::ostringstream os;
            os << where << ": Sigma must have unit diagonal (entry " << j << " is " << sigma(j, j)
               << "); convert with standardize_covariance first";
            throw ContractError(os.str());
        }
    }
}

namespace {

double checked_min_eigenvalue(const SymMatrix& sigma, const char* where)
{
    const double lmin = min_eigenvalue(sigma);
    if (lmin < -1e-8) {
        std::ostringstream os;
        os << where << ": Sigma is not PSD (smallest eigenvalue " << lmin << ")";
        throw NotPsdError(os.str());
    }
    return std::max(lmin, 0.0);
}

struct BarrierEval
{
    bool feasible = false;
    double value = 0.0;
    Matrix inv;  // A^{-1}
};

// f(s) = -t * sum(s) - logdet(a Sigma - diag(s)) - sum log s - sum log(1 - s)
BarrierEval barrier_eval(const Matrix& scaled_sigma, const Vector& s, double t, bool want_inverse)
{
    BarrierEval out;
    if ((s.array() <= 0.0).any() || (s.array() >= 1.0).any()) {
        return out;
    }
    Matrix a = scaled_sigma;
    a.diagonal() -= s;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
        return out;
    }
    const Matrix& l = llt.matrixLLT();
    double logdet = 0.0;
    for (Index i = 0; i < l.rows(); ++i) {
        if (!(l(i, i) > 0.0)) {
            return out;
        }
        logdet += 2.0 * std::log(l(i, i));
    }
    out.feasible = true;
    out.value = -t * s.sum() - logdet - s.array().log().sum() - (1.0 - s.array()).log().sum();
    if (want_inverse) {
        out.inv = llt.solve(Matrix::Identity(a.rows(), a.cols()));
    }
    return out;
}

} // namespace

Vector solve_s_equicorrelated(const SymMatrix& sigma, int copies)
{
    require_unit_diagonal(sigma, "solve_s_equicorrelated");
    const double lmin = checked_min_eigenvalue(sigma, "solve_s_equicorrelated");
    const double value = std::min(1.0, copy_factor(copies) * lmin);
    return Vector::Constant(sigma.dim(), value);
}

double s_objective(const Vector& s)
{
    return (1.0 - s.array()).abs().sum();
}

Vector solve_s_sdp(const SymMatrix& sigma, int copies, int max_newton)
{
    require_unit_diagonal(sigma, "solve_s_sdp");
    const double lmin = checked_min_eigenvalue(sigma, "solve_s_sdp");
    const double factor = copy_factor(copies);
    const Index p = sigma.dim();
    const Vector equi = Vector::Constant(p, std::min(1.0, factor * lmin));
    if (equi(0) >= 1.0 || lmin <= 0.0) {
        return equi;
    }

    const Matrix scaled = factor * sigma.mat();
    Vector s = Vector::Constant(p, 0.5 * std::min(1.0, factor * lmin));
    const double barrier_terms = 3.0 * static_cast<double>(p);

    int newton_steps = 0;
    for (double t = 1.0; barrier_terms / t > 1e-9 && newton_steps < max_newton; t *= 8.0) {
        while (newton_steps < max_newton) {
            auto cur = barrier_eval(scaled, s, t, true);
            if (!cur.feasible) {
                break;
            }
            const Vector inv_s = s.cwiseInverse();
            const Vector inv_1s = (Vector::Ones(p) - s).cwiseInverse();
            const Vector grad = -t * Vector::Ones(p) + cur.inv.diagonal() - inv_s + inv_1s;
            Matrix hess = cur.inv.cwiseProduct(cur.inv);
            hess.diagonal() += inv_s.cwiseProduct(inv_s) + inv_1s.cwiseProduct(inv_1s);
            Eigen::LDLT<Matrix> ldlt(hess);
            const Vector step = -ldlt.solve(grad);
            if (!step.allFinite()) {
                break;
            }
            const double decrement = -grad.dot(step);
            ++newton_steps;
            if (decrement < 1e-12) {
                break;
            }
            double alpha = 1.0;
            bool moved = false;
            for (int k = 0; k < 60; ++k) {
                const Vector trial = s + alpha * step;
                const auto next = barrier_eval(scaled, trial, t, false);
                if (next.feasible && next.value <= cur.value - 0.25 * alpha * decrement) {
                    s = trial;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!moved) {
                break;
            }
        }
    }

    // Final certification against the PSD band.
    Matrix a = scaled;
    a.diagonal() -= s;
    if (!is_psd(a, 1e-10) || s_objective(s) > s_objective(equi)) {
        return equi;
    }
    return s;
}

KnockoffModel build_model(const SymMatrix& sigma, const Vector& s, int copies)
{
    if (s.size() != sigma.dim()) {
        throw ContractError("build_model: s length does not match Sigma");
    }
    if ((s.array() < 0.0).any()) {
        throw ContractError("build_model: s must be nonnegative");
    }
    Matrix d = s.asDiagonal();
    auto model = build_model_with_d(sigma, d, copies);
    model.s = s;
    return model;
}

KnockoffModel build_model_with_d(const SymMatrix& sigma, const Matrix& d, int copies)
{
    const Index p = sigma.dim();
    if (d.rows() != p || d.cols() != p) {
        throw ContractError("build_model: D dimension does not match Sigma");
    }
    const double factor = copy_factor(copies);
    {
        Matrix slack = factor * sigma.mat() - d;
        if (!is_psd(SymMatrix::symmetrized(slack).mat(), 1e-8 * std::max(1.0, sigma.max_abs()))) {
            throw NotPsdError("build_model: D is infeasible, ((M+1)/M) Sigma - D is not PSD");
        }
    }
    Eigen::LLT<Matrix> llt(sigma.mat());
    if (llt.info() != Eigen::Success) {
        throw SingularMatrixError(
            "build_model: Sigma is singular; add a small ridge (jitter) to its diagonal before building knockoffs");
    }
    const Matrix sinv_d = llt.solve(d);        // Sigma^{-1} D
    const Matrix d_sinv_d = d.transpose() * sinv_d;
    const Matrix single_p = Matrix::Identity(p, p) - sinv_d;
    const Matrix diag_block = 2.0 * d - d_sinv_d;
    const Matrix off_block = d - d_sinv_d;

    KnockoffModel model;
    model.sigma = sigma;
    model.d = d;
    model.s = d.diagonal();
    model.copies = copies;
    model.p_mat.resize(p, p * copies);
    Matrix v(p * copies, p * copies);
    for (int a = 0; a < copies; ++a) {
        model.p_mat.block(0, a * p, p, p) = single_p;
        for (int b = 0; b < copies; ++b) {
            v.block(a * p, b * p, p, p) = (a == b) ? diag_block : off_block;
        }
    }
    auto v_sym = SymMatrix::symmetrized(v);
    const auto eig = sym_eigen(v_sym);
    const double scale = std::max(1.0, v_sym.max_abs());
    if (eig.values.size() > 0 && eig.values.minCoeff() < -1e-8 * scale) {
        std::ostringstream os;
        os << "build_model: V has eigenvalue " << eig.values.minCoeff() << " below the PSD band";
        throw NotPsdError(os.str());
    }
    const Vector clamped = eig.values.cwiseMax(0.0);
    model.v = SymMatrix::symmetrized(eig.vectors * clamped.asDiagonal() * eig.vectors.transpose());
    const Vector roots = clamped.cwiseSqrt();
    model.v_sqrt = SymMatrix::symmetrized(eig.vectors * roots.asDiagonal() * eig.vectors.transpose());
    return model;
}

KnockoffModel build_group_model(const SymMatrix& sigma, const GroupPartition& partition, int copies)
{
    const Index p = sigma.dim();
    if (partition.features() != p) {
        throw ContractError("build_group_model: partition length does not match Sigma");
    }
    Matrix block = Matrix::Zero(p, p);
    for (int g = 1; g <= partition.groups(); ++g) {
        const auto& idx = partition.members(g);
        for (Index a : idx) {
            for (Index b : idx) {
                block(a, b) = sigma(a, b);
            }
        }
    }
    Eigen::LLT<Matrix> llt(block);
    if (llt.info() != Eigen::Success) {
        throw NotPsdError("build_group_model: a within-group block of Sigma is singular");
    }
    // lambda_min(L^{-1} Sigma L^{-T}) with B = L L^T.
    const Matrix l = llt.matrixL();
    Matrix whitened = l.triangularView<Eigen::Lower>().solve(sigma.mat());
    whitened = l.triangularView<Eigen::Lower>().solve(whitened.transpose()).transpose();
    const double lmin = min_eigenvalue(SymMatrix::symmetrized(whitened));
    if (lmin < -1e-8) {
        throw NotPsdError("build_group_model: Sigma is not PSD");
    }
    const double c = std::min(1.0, copy_factor(copies) * std::max(lmin, 0.0));
    return build_model_with_d(sigma, c * block, copies);
}

Matrix sample_knockoff_matrix(const KnockoffModel& model, const Matrix& x, RngStream& rng)
{
    if (x.cols() != model.features()) {
        std::ostringstream os;
        os << "sample_knockoff_matrix: X has " << x.cols() << " columns, model expects " << model.features();
        throw ContractError(os.str());
    }
    const Matrix e = gaussian_matrix(rng, x.rows(), model.knockoff_dim());
    Matrix out = x * model.p_mat;
    out.noalias() += e * model.v_sqrt.mat();
    return out;
}

Vector sample_ghost_zscores(const KnockoffModel& model, const Vector& xty, double yty, RngStream& rng)
{
    if (xty.size() != model.features()) {
        throw ContractError("sample_ghost_zscores: xty length does not match the model");
    }
    if (!(yty >= 0.0)) {
        throw ContractError("sample_ghost_zscores: yty must be nonnegative");
    }
    const Vector xi = rng.normal_vector(model.knockoff_dim());
    Vector out = model.p_mat.transpose() * xty;
    if (yty > 0.0) {
        out.noalias() += std::sqrt(yty) * (model.v_sqrt.mat() * xi);
    }
    return out;
}

Standardized standardize_covariance(const SymMatrix& cov)
{
    const Index p = cov.dim();
    Vector sd(p);
    for (Index j = 0; j < p; ++j) {
        if (!(cov(j, j) > 0.0)) {
            std::ostringstream os;
            os << "standardize_covariance: variance of feature " << j << " is not positive";
            throw ContractError(os.str());
        }
        sd(j) = std::sqrt(cov(j, j));
    }
    const Vector inv = sd.cwiseInverse();
    Matrix corr = inv.asDiagonal() * cov.mat() * inv.asDiagonal();
    corr.diagonal().setOnes();
    return {SymMatrix::symmetrized(corr), sd};
}

Vector rescale_xty(const Vector& xty, const Vector& scale)
{
    if (xty.size() != scale.size()) {
        throw ContractError("rescale_xty: length mismatch");
    }
    return xty.cwiseQuotient(scale);
}

} // namespace gk
