#include <gk/crt.hpp>

#include <cmath>

namespace gk {

namespace {

Matrix drop_index(const Matrix& m, Index j)
{
    const Index p = m.rows();
    Matrix out(p - 1, p - 1);
    for (Index a = 0, ra = 0; a < p; ++a) {
        if (a == j) {
            continue;
        }
        for (Index b = 0, rb = 0; b < p; ++b) {
            if (b == j) {
                continue;
            }
            out(ra, rb++) = m(a, b);
        }
        ++ra;
    }
    return out;
}

Vector drop_entry(const Vector& v, Index j)
{
    Vector out(v.size() - 1);
    out << v.head(j), v.tail(v.size() - j - 1);
    return out;
}

void check_draws(int draws)
{
    if (draws < 1) {
        throw ConfigError("CRT: number of resamples B must be at least 1");
    }
}

} // namespace

ConditionalParams conditional_params(const SymMatrix& sigma, Index j)
{
    const Index p = sigma.dim();
    if (j < 0 || j >= p) {
        throw ContractError("conditional_params: feature index out of range");
    }
    ConditionalParams out;
    if (p == 1) {
        out.gamma = Vector();
        out.v = sigma(0, 0);
        return out;
    }
    const Matrix rest = drop_index(sigma.mat(), j);
    const Vector cross = drop_entry(sigma.mat().col(j), j);
    Eigen::LLT<Matrix> llt(rest);
    if (llt.info() != Eigen::Success) {
        throw NotPsdError("conditional_params: Sigma without feature " + std::to_string(j) +
                          " is not positive definite");
    }
    out.gamma = llt.solve(cross);
    out.v = sigma(j, j) - cross.dot(out.gamma);
    if (!(out.v > 0.0)) {
        throw NotPsdError("conditional_params: conditional variance of feature " + std::to_string(j) +
                          " is not positive");
    }
    return out;
}

Vector ghost_crt_marginal(const SummaryStats& stats, const SymMatrix& sigma, int draws, const RngStream& rng,
                          const CrtOptions& options)
{
    stats.validate();
    check_draws(draws);
    const Index p = stats.features();
    if (sigma.dim() != p) {
        throw ContractError("ghost_crt_marginal: Sigma dimension does not match xty");
    }
    const double ynorm = std::sqrt(stats.yty);
    Vector pvals(p);
    for (Index j = 0; j < p; ++j) {
        const ConditionalParams cp = conditional_params(sigma, j);
        const double center = p > 1 ? cp.gamma.dot(drop_entry(stats.xty, j)) : 0.0;
        const double spread = ynorm * std::sqrt(cp.v);
        const double observed = std::abs(stats.xty(j));
        RngStream local = rng.derive(static_cast<std::uint64_t>(j));
        int hits = 0;
        for (int b = 0; b < draws; ++b) {
            const double z = center + spread * local.normal();
            const double t = options.literal ? z : std::abs(z);
            if (t >= observed) {
                ++hits;
            }
        }
        pvals(j) = (1.0 + hits) / (draws + 1.0);
    }
    return pvals;
}

Vector ghost_crt_lasso(const FullSummaryStats& stats, const SymMatrix& sigma, int draws, double lambda,
                       const RngStream& rng, const CrtOptions& options, const SolverConfig& config)
{
    stats.validate();
    check_draws(draws);
    const Index p = stats.features();
    if (sigma.dim() != p) {
        throw ContractError("ghost_crt_lasso: Sigma dimension does not match xtx");
    }
    if (static_cast<long long>(draws) * p > options.max_refits) {
        throw ConfigError("ghost_crt_lasso: B * p = " + std::to_string(static_cast<long long>(draws) * p) +
                          " refits exceeds the compute budget of " + std::to_string(options.max_refits));
    }
    const SurrogateData sur = reconstruct_surrogate(stats);
    const Matrix& x = sur.x_check;
    const Vector& y = sur.y_check;
    const Index n = x.rows();
    const Matrix gram = x.transpose() * x;
    const Vector xty = x.transpose() * y;

    SolverConfig cfg = config;
    cfg.polish = false;
    const Vector beta_obs = cd_quadratic_lasso(QuadProblem{SymMatrix::symmetrized(gram), xty, lambda, 0.0}, cfg);

    Vector pvals(p);
    for (Index j = 0; j < p; ++j) {
        const ConditionalParams cp = conditional_params(sigma, j);
        Matrix x_rest(n, p - 1);
        x_rest << x.leftCols(j), x.rightCols(p - j - 1);
        const Vector mean_col = p > 1 ? Vector(x_rest * cp.gamma) : Vector::Zero(n);
        const double sd = std::sqrt(cp.v);
        const double observed = std::abs(beta_obs(j));
        RngStream local = rng.derive(static_cast<std::uint64_t>(j));
        Matrix c = gram;
        Vector d = xty;
        int hits = 0;
        for (int b = 0; b < draws; ++b) {
            const Vector col = mean_col + sd * local.normal_vector(n);
            const Vector cross = x.transpose() * col;
            c.row(j) = cross.transpose();
            c.col(j) = cross;
            c(j, j) = col.squaredNorm();
            d(j) = col.dot(y);
            cfg.warm_start = beta_obs;
            const Vector beta = cd_quadratic_lasso(QuadProblem{SymMatrix::symmetrized(c), d, lambda, 0.0}, cfg);
            const double t = options.literal ? beta(j) : std::abs(beta(j));
            if (t >= observed) {
                ++hits;
            }
        }
        pvals(j) = (1.0 + hits) / (draws + 1.0);
    }
    return pvals;
}

} // namespace gk
