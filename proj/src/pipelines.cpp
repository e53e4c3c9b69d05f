#include <gk/pipelines.hpp>

#include <cmath>
#include <limits>

namespace gk {

void SummaryStats::validate() const
{
    if (n < 1) {
        throw ContractError("SummaryStats: n must be at least 1");
    }
    if (!xty.allFinite()) {
        throw InvalidSummaryError("SummaryStats: xty has non-finite entries");
    }
    if (!(yty >= 0.0) || !std::isfinite(yty)) {
        throw InvalidSummaryError("SummaryStats: yty must be finite and nonnegative");
    }
}

SummaryStats SummaryStats::from_data(const Matrix& x, const Vector& y)
{
    if (x.rows() != y.size()) {
        throw ContractError("SummaryStats::from_data: row count mismatch");
    }
    return SummaryStats{x.transpose() * y, y.squaredNorm(), x.rows()};
}

SummaryStats SummaryStats::from_full(const FullSummaryStats& full)
{
    return SummaryStats{full.xty, full.yty, full.n};
}

void TuningRule::validate() const
{
    if (kind == TuningKind::fixed) {
        if (!(lambda >= 0.0)) {
            throw ConfigError("tuning: fixed lambda must be nonnegative");
        }
        return;
    }
    if (!(kappa > 0.0) || kappa > 1.0) {
        throw ConfigError("tuning: kappa must lie in (0, 1]");
    }
    if (mc_samples < 1) {
        throw ConfigError("tuning: mc_samples must be at least 1");
    }
    if (grid_size < 1) {
        throw ConfigError("tuning: grid_size must be at least 1");
    }
    if (!(train_share > 0.0) || !(train_share < 1.0)) {
        throw ConfigError("tuning: train_share must lie in (0, 1)");
    }
}

TuningRule TuningRule::fixed(double lambda)
{
    TuningRule r;
    r.kind = TuningKind::fixed;
    r.lambda = lambda;
    return r;
}

TuningRule TuningRule::sqrt_lasso(double kappa, int mc_samples)
{
    TuningRule r;
    r.kind = TuningKind::sqrt_lasso_mc;
    r.kappa = kappa;
    r.mc_samples = mc_samples;
    return r;
}

TuningRule TuningRule::lasso_min(double kappa, int mc_samples)
{
    TuningRule r;
    r.kind = TuningKind::lasso_min;
    r.kappa = kappa;
    r.mc_samples = mc_samples;
    return r;
}

TuningRule TuningRule::pseudo_sum(Index grid_size, double train_share)
{
    TuningRule r;
    r.kind = TuningKind::pseudo_sum;
    r.grid_size = grid_size;
    r.train_share = train_share;
    return r;
}

ImportanceTable slot_table(const Vector& importance, Index p, int copies)
{
    if (copies < 1 || importance.size() != p * (copies + 1)) {
        throw ContractError("slot_table: importance length is not (M+1) * p");
    }
    ImportanceTable t;
    t.z.resize(p, copies + 1);
    for (int c = 0; c <= copies; ++c) {
        t.z.col(c) = importance.segment(c * p, p);
    }
    return t;
}

namespace {

void check_model(const KnockoffModel& model, Index p, const char* where)
{
    if (model.features() != p) {
        throw ContractError(std::string(where) + ": model has " + std::to_string(model.features()) +
                            " features but the statistics have " + std::to_string(p));
    }
}

SelectionResult filter_slots(const Vector& importance, Index p, int copies, double q)
{
    return multi_knockoff_filter(slot_table(importance, p, copies), q);
}

} // namespace

SelectionResult gk_marginal(const SummaryStats& stats, const KnockoffModel& model, double q, RngStream& rng)
{
    stats.validate();
    check_model(model, stats.features(), "gk_marginal");
    const Index p = stats.features();
    const Vector ghost = sample_ghost_zscores(model, stats.xty, stats.yty, rng);
    Vector imp(p + ghost.size());
    imp << stats.xty.cwiseAbs(), ghost.cwiseAbs();
    return filter_slots(imp, p, model.copies, q);
}

double sqrt_lasso_lambda(const Matrix& a, double kappa, int mc_samples, RngStream& rng)
{
    if (mc_samples < 1) {
        throw ConfigError("sqrt_lasso_lambda: mc_samples must be at least 1");
    }
    const Matrix e = gaussian_matrix(rng, a.rows(), mc_samples);
    const Matrix ate = a.transpose() * e;
    double total = 0.0;
    for (Index b = 0; b < mc_samples; ++b) {
        total += ate.col(b).lpNorm<Eigen::Infinity>() / e.col(b).norm();
    }
    return kappa * total / static_cast<double>(mc_samples);
}

Vector known_cov_importance(const Matrix& x, const Matrix& x_knock, const Vector& y, KnownCovStatistic statistic,
                            const TuningRule& tuning, RngStream& rng, const SolverConfig& config)
{
    const SymMatrix gram = assemble_gram(x, x_knock, y);
    const Index dim = x.cols() + x_knock.cols();
    const auto c = SymMatrix::symmetrized(gram.mat().topLeftCorner(dim, dim));
    const Vector aty = gram.mat().col(dim).head(dim);
    const double yty = gram(dim, dim);
    const Index n = x.rows();
    const double dmax = aty.size() ? aty.cwiseAbs().maxCoeff() : 0.0;
    if (yty <= 0.0 || dmax <= 0.0) {
        return Vector::Zero(dim);
    }

    switch (statistic) {
    case KnownCovStatistic::fixed_lambda: {
        if (tuning.kind != TuningKind::fixed) {
            throw ConfigError("fixed-lambda statistic needs a fixed tuning rule");
        }
        tuning.validate();
        return cd_quadratic_lasso(QuadProblem{c, aty, tuning.lambda, 0.0}, config).cwiseAbs();
    }
    case KnownCovStatistic::sqrtlasso: {
        if (tuning.kind != TuningKind::sqrt_lasso_mc && tuning.kind != TuningKind::fixed) {
            throw ConfigError("sqrt-lasso statistic needs a Monte Carlo or fixed tuning rule");
        }
        tuning.validate();
        double lambda = tuning.lambda;
        if (tuning.kind == TuningKind::sqrt_lasso_mc) {
            Matrix a(n, dim);
            a << x, x_knock;
            lambda = sqrt_lasso_lambda(a, tuning.kappa, tuning.mc_samples, rng);
        }
        return sqrt_lasso(c, aty, yty, n, lambda, config).beta.cwiseAbs();
    }
    case KnownCovStatistic::lassomax: {
        SolverConfig path_cfg = config;
        path_cfg.polish = false;
        path_cfg.tol = std::max(config.tol, 1e-8);
        const Index points = tuning.grid_size > 0 ? tuning.grid_size : 100;
        return lasso_entry_values(c, aty, log_grid(dmax, 1e-3, points), path_cfg, 0.0);
    }
    }
    throw ConfigError("unknown known-covariance statistic");
}

SelectionResult gk_known_cov(const FullSummaryStats& stats, const KnockoffModel& model, KnownCovStatistic statistic,
                             const TuningRule& tuning, double q, RngStream& rng, const SolverConfig& config)
{
    stats.validate();
    check_model(model, stats.features(), "gk_known_cov");
    const SurrogateData sur = reconstruct_surrogate(stats);
    const Matrix xk = sample_knockoff_matrix(model, sur.x_check, rng);
    const Vector imp = known_cov_importance(sur.x_check, xk, sur.y_check, statistic, tuning, rng, config);
    return filter_slots(imp, stats.features(), model.copies, q);
}

SelectionResult kf_known_cov(const Matrix& x, const Vector& y, const KnockoffModel& model, KnownCovStatistic statistic,
                             const TuningRule& tuning, double q, RngStream& rng, const SolverConfig& config)
{
    check_model(model, x.cols(), "kf_known_cov");
    const Matrix xk = sample_knockoff_matrix(model, x, rng);
    const Vector imp = known_cov_importance(x, xk, y, statistic, tuning, rng, config);
    return filter_slots(imp, x.cols(), model.copies, q);
}

QuadProblem pseudolasso_problem(const SummaryStats& stats, const KnockoffModel& model, const Vector& ghost,
                                double lambda)
{
    stats.validate();
    check_model(model, stats.features(), "pseudolasso_problem");
    if (ghost.size() != model.knockoff_dim()) {
        throw ContractError("pseudolasso_problem: ghost vector has the wrong length");
    }
    QuadProblem prob;
    prob.c = model.joint_gram();
    prob.d.resize(stats.features() + ghost.size());
    prob.d << stats.xty, ghost;
    prob.d /= static_cast<double>(stats.n);
    prob.lambda = lambda;
    prob.gamma = default_ridge(prob.c);
    return prob;
}

namespace {

Matrix ridged(const SymMatrix& g)
{
    Matrix m = g.mat();
    m.diagonal().array() += 2.0 * default_ridge(g);
    return m;
}

} // namespace

double pseudo_sigma_hat(const SummaryStats& stats, const KnockoffModel& model, const Vector& ghost, bool reduced)
{
    stats.validate();
    const auto n = static_cast<double>(stats.n);
    Vector qv;
    Matrix g;
    if (reduced) {
        qv = stats.xty;
        g = ridged(model.sigma);
    } else {
        qv.resize(stats.features() + ghost.size());
        qv << stats.xty, ghost;
        g = ridged(model.joint_gram());
    }
    Eigen::LLT<Matrix> llt(g);
    if (llt.info() != Eigen::Success) {
        throw SingularMatrixError("pseudo_sigma_hat: joint covariance is singular even after the ridge; add jitter");
    }
    const double quad = qv.dot(llt.solve(qv));
    const auto k = static_cast<double>(qv.size());
    const double s2 = ((k + n + 1.0) * stats.yty - quad) / (n * (n + 1.0));
    return std::sqrt(std::max(s2, 0.0));
}

double tune_lasso_min(const SummaryStats& stats, const KnockoffModel& model, const Vector& ghost,
                      const TuningRule& rule, RngStream& rng)
{
    rule.validate();
    const double sigma = pseudo_sigma_hat(stats, model, ghost, rule.reduced_sigma);
    const Matrix g = ridged(model.joint_gram());
    Eigen::LLT<Matrix> llt(g);
    if (llt.info() != Eigen::Success) {
        throw SingularMatrixError("tune_lasso_min: joint covariance is singular even after the ridge; add jitter");
    }
    const Matrix z = gaussian_matrix(rng, g.rows(), rule.mc_samples);
    const Matrix lz = llt.matrixL() * z;
    double total = 0.0;
    for (Index b = 0; b < lz.cols(); ++b) {
        total += lz.col(b).lpNorm<Eigen::Infinity>();
    }
    const double mean_max = total / static_cast<double>(rule.mc_samples);
    return rule.kappa * sigma * mean_max / std::sqrt(static_cast<double>(stats.n));
}

double tune_pseudo_sum(const SummaryStats& stats, const KnockoffModel& model, const Vector& ghost,
                       const TuningRule& rule, RngStream& rng, const SolverConfig& config)
{
    rule.validate();
    const auto n = static_cast<double>(stats.n);
    const double nt = rule.train_share * n;
    const double nv = n - nt;
    const QuadProblem base = pseudolasso_problem(stats, model, ghost, 0.0);
    const Vector& r = base.d;

    const Matrix g = ridged(base.c);
    Eigen::LLT<Matrix> llt(g);
    if (llt.info() != Eigen::Success) {
        throw SingularMatrixError("tune_pseudo_sum: joint covariance is singular even after the ridge; add jitter");
    }
    // Y is not assumed standardized: the split noise carries its scale.
    const double y_sd = std::sqrt(stats.yty / n);
    const Vector noise = llt.matrixL() * rng.normal_vector(r.size());
    const Vector train = r + std::sqrt(nv / (n * nt)) * y_sd * noise;
    const Vector valid = (n * r - nt * train) / nv;

    const double lmax = train.cwiseAbs().maxCoeff();
    if (!(lmax > 0.0)) {
        return 0.0;
    }
    const Vector grid = log_grid(lmax, 1e-3, rule.grid_size);
    SolverConfig path_cfg = config;
    path_cfg.polish = false;
    path_cfg.warm_start.reset();
    // Walk down the grid one value at a time; stop once the score has not
    // improved for `patience` consecutive values.
    const Index patience = 10;
    double best_score = -std::numeric_limits<double>::infinity();
    Index best = 0;
    Vector beta = Vector::Zero(r.size());
    for (Index k = 0; k < grid.size(); ++k) {
        path_cfg.warm_start = beta;
        beta = lasso_path(base.c, train, grid.segment(k, 1), path_cfg, base.gamma).col(0);
        const double quad = beta.dot(base.c.mat() * beta);
        if (quad > 0.0) {
            const double score = beta.dot(valid) / std::sqrt(quad);
            if (score > best_score) {
                best_score = score;
                best = k;
            }
        }
        if (std::isfinite(best_score) && k - best >= patience) {
            break;
        }
    }
    return grid(best);
}

PseudoLassoFit pseudolasso_fit(const SummaryStats& stats, const KnockoffModel& model, const TuningRule& tuning,
                               RngStream& rng, const SolverConfig& config)
{
    stats.validate();
    check_model(model, stats.features(), "gk_pseudolasso");
    tuning.validate();
    PseudoLassoFit fit;
    fit.ghost = sample_ghost_zscores(model, stats.xty, stats.yty, rng);
    switch (tuning.kind) {
    case TuningKind::fixed:
        fit.lambda = tuning.lambda;
        break;
    case TuningKind::lasso_min:
        fit.lambda = tune_lasso_min(stats, model, fit.ghost, tuning, rng);
        break;
    case TuningKind::pseudo_sum:
        fit.lambda = tune_pseudo_sum(stats, model, fit.ghost, tuning, rng, config);
        break;
    case TuningKind::sqrt_lasso_mc:
        throw ConfigError("gk_pseudolasso: tuning must be fixed, lasso_min or pseudo_sum");
    }
    const QuadProblem prob = pseudolasso_problem(stats, model, fit.ghost, fit.lambda);
    fit.beta = cd_quadratic_lasso(prob, config);
    return fit;
}

SelectionResult gk_pseudolasso(const SummaryStats& stats, const KnockoffModel& model, const TuningRule& tuning,
                               double q, RngStream& rng, const GroupPartition* partition,
                               const SolverConfig& config)
{
    const PseudoLassoFit fit = pseudolasso_fit(stats, model, tuning, rng, config);
    if (partition != nullptr) {
        if (partition->features() != stats.features()) {
            throw ContractError("gk_pseudolasso: partition size does not match p");
        }
        return multi_knockoff_filter(group_aggregate(fit.beta, *partition, model.copies), q);
    }
    return filter_slots(fit.beta.cwiseAbs(), stats.features(), model.copies, q);
}

SelectionResult kf_lassocv(const Matrix& x, const Vector& y, const KnockoffModel& model, double q, int folds,
                           RngStream& rng, const SolverConfig& config)
{
    check_model(model, x.cols(), "kf_lassocv");
    const Matrix xk = sample_knockoff_matrix(model, x, rng);
    Matrix a(x.rows(), x.cols() + xk.cols());
    a << x, xk;
    const CvResult cv = cv_lasso(a, y, folds, Vector(), rng, config);
    return filter_slots(cv.beta.cwiseAbs(), x.cols(), model.copies, q);
}

} // namespace gk
