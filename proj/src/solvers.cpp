#include <gk/solvers.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace gk {

double soft_threshold(double x, double t)
{
    if (x > t) {
        return x - t;
    }
    if (x < -t) {
        return x + t;
    }
    return 0.0;
}

double default_ridge(const SymMatrix& c)
{
    if (c.dim() == 0) {
        return 0.0;
    }
    return 0.5 * 1e-6 * c.mat().trace() / static_cast<double>(c.dim());
}

namespace {

double sign_of(double v)
{
    return (v > 0.0) - (v < 0.0);
}

/// Covariance-form coordinate descent state; grad = C beta - d (no ridge).
class CdEngine
{
public:
    CdEngine(const Matrix& c, const Vector& d, double lambda, double gamma)
        : c_(c), d_(d), lambda_(lambda), two_gamma_(2.0 * gamma)
    {}

    void start(const Vector& beta)
    {
        beta_ = beta;
        refresh_gradient();
    }

    void refresh_gradient() { grad_.noalias() = c_ * beta_ - d_; }

    void set_lambda(double lambda) { lambda_ = lambda; }

    const Vector& beta() const { return beta_; }

    double coordinate_kkt(Index j) const
    {
        const double g = grad_(j) + two_gamma_ * beta_(j);
        if (beta_(j) != 0.0) {
            return std::abs(g + lambda_ * sign_of(beta_(j)));
        }
        return std::max(0.0, std::abs(g) - lambda_);
    }

    double max_kkt() const
    {
        double worst = 0.0;
        for (Index j = 0; j < beta_.size(); ++j) {
            worst = std::max(worst, coordinate_kkt(j));
        }
        return worst;
    }

    double max_kkt_active() const
    {
        double worst = 0.0;
        for (Index j : active_) {
            worst = std::max(worst, coordinate_kkt(j));
        }
        return worst;
    }

    void update(Index j)
    {
        const double cjj = c_(j, j);
        const double denom = cjj + two_gamma_;
        double next = 0.0;
        if (denom > 0.0) {
            const double z = cjj * beta_(j) - grad_(j);
            next = soft_threshold(z, lambda_) / denom;
        }
        const double delta = next - beta_(j);
        if (delta != 0.0) {
            beta_(j) = next;
            grad_.noalias() += delta * c_.col(j);
        }
    }

    void full_sweep()
    {
        for (Index j = 0; j < beta_.size(); ++j) {
            update(j);
        }
        active_.clear();
        for (Index j = 0; j < beta_.size(); ++j) {
            if (beta_(j) != 0.0) {
                active_.push_back(j);
            }
        }
    }

    void active_sweep()
    {
        for (Index j : active_) {
            update(j);
        }
    }

    /// 1/2 b^T C b - d^T b + lambda |b|_1 + gamma |b|^2 from the maintained gradient.
    double objective() const
    {
        return 0.5 * beta_.dot(grad_) - 0.5 * d_.dot(beta_) + lambda_ * beta_.lpNorm<1>() +
               0.5 * two_gamma_ * beta_.squaredNorm();
    }

    /// Exact solve on the active set with the current signs, then a step
    /// toward it that stops where the first coordinate would change sign.
    /// `strict` keeps the step only if the KKT residual does not grow;
    /// otherwise the step is kept when the objective does not grow.
    void polish(bool strict)
    {
        std::vector<Index> act;
        for (Index j = 0; j < beta_.size(); ++j) {
            if (beta_(j) != 0.0) {
                act.push_back(j);
            }
        }
        if (act.empty()) {
            return;
        }
        const auto k = static_cast<Index>(act.size());
        Matrix sub(k, k);
        Vector rhs(k);
        for (Index a = 0; a < k; ++a) {
            for (Index b = 0; b < k; ++b) {
                sub(a, b) = c_(act[a], act[b]);
            }
            sub(a, a) += two_gamma_;
            rhs(a) = d_(act[a]) - lambda_ * sign_of(beta_(act[a]));
        }
        Eigen::LDLT<Matrix> ldlt(sub);
        if (ldlt.info() != Eigen::Success) {
            return;
        }
        const Vector sol = ldlt.solve(rhs);
        if (!sol.allFinite()) {
            return;
        }
        double step = 1.0;
        Index blocking = -1;
        for (Index a = 0; a < k; ++a) {
            const double b = beta_(act[a]);
            if (sign_of(sol(a)) != sign_of(b)) {
                const double t = b / (b - sol(a));
                if (t < step) {
                    step = t;
                    blocking = a;
                }
            }
        }
        const Vector saved = beta_;
        const double before = strict ? max_kkt() : objective();
        for (Index a = 0; a < k; ++a) {
            beta_(act[a]) += step * (sol(a) - beta_(act[a]));
            if (a == blocking || sign_of(beta_(act[a])) != sign_of(saved(act[a]))) {
                beta_(act[a]) = 0.0;
            }
        }
        refresh_gradient();
        const double after = strict ? max_kkt() : objective();
        if (!(after <= before)) {
            beta_ = saved;
            refresh_gradient();
        }
    }

private:
    const Matrix& c_;
    const Vector& d_;
    double lambda_;
    double two_gamma_;
    Vector beta_;
    Vector grad_;
    std::vector<Index> active_;
};

void check_problem(const QuadProblem& problem)
{
    if (problem.d.size() != problem.c.dim()) {
        throw ContractError("cd_quadratic_lasso: d length does not match C");
    }
    if (!(problem.lambda >= 0.0) || !(problem.gamma >= 0.0)) {
        throw ContractError("cd_quadratic_lasso: lambda and gamma must be nonnegative");
    }
}

double diag_scale(const Matrix& c)
{
    return c.size() == 0 ? 1.0 : std::max(1.0, c.diagonal().maxCoeff());
}

/// Runs the engine to convergence; returns false if the sweep cap was hit.
bool run_to_convergence(CdEngine& engine, double threshold, int max_sweeps, int& sweeps_used)
{
    int refreshes = 0;
    while (sweeps_used < max_sweeps) {
        engine.full_sweep();
        ++sweeps_used;
        if (engine.max_kkt() <= threshold) {
            // guard against drift in the incrementally maintained gradient
            engine.refresh_gradient();
            if (engine.max_kkt() <= threshold || ++refreshes > 3) {
                return engine.max_kkt() <= threshold;
            }
            continue;
        }
        for (int inner = 1; inner <= 60 && sweeps_used < max_sweeps; ++inner) {
            engine.active_sweep();
            ++sweeps_used;
            if (engine.max_kkt_active() <= threshold) {
                break;
            }
            if (inner % 10 == 0) {
                // CD crawls on ill-conditioned blocks; an active-set step gets it unstuck
                engine.polish(false);
                if (engine.max_kkt_active() <= threshold) {
                    break;
                }
            }
        }
    }
    return false;
}

} // namespace

double kkt_residual(const QuadProblem& problem, const Vector& beta)
{
    check_problem(problem);
    const Vector grad = problem.c.mat() * beta - problem.d + 2.0 * problem.gamma * beta;
    double worst = 0.0;
    for (Index j = 0; j < beta.size(); ++j) {
        const double r = beta(j) != 0.0 ? std::abs(grad(j) + problem.lambda * sign_of(beta(j)))
                                         : std::max(0.0, std::abs(grad(j)) - problem.lambda);
        worst = std::max(worst, r);
    }
    return worst;
}

double quad_objective(const QuadProblem& problem, const Vector& beta)
{
    return 0.5 * beta.dot(problem.c.mat() * beta) - problem.d.dot(beta) + problem.lambda * beta.lpNorm<1>() +
           problem.gamma * beta.squaredNorm();
}

Vector cd_quadratic_lasso(const QuadProblem& problem, const SolverConfig& config)
{
    check_problem(problem);
    if (!(config.tol > 0.0) || config.max_sweeps < 1) {
        throw ConfigError("SolverConfig: tol must be positive and max_sweeps >= 1");
    }
    const Index dim = problem.c.dim();
    CdEngine engine(problem.c.mat(), problem.d, problem.lambda, problem.gamma);
    if (config.warm_start && config.warm_start->size() == dim) {
        engine.start(*config.warm_start);
    } else {
        engine.start(Vector::Zero(dim));
    }
    const double threshold = config.tol * diag_scale(problem.c.mat());
    int sweeps = 0;
    if (!run_to_convergence(engine, threshold, config.max_sweeps, sweeps)) {
        const Vector& b = engine.beta();
        std::ostringstream os;
        os << "cd_quadratic_lasso: no convergence after " << sweeps << " sweeps (KKT residual "
           << engine.max_kkt() << ")";
        throw NonConvergenceError(os.str(), std::vector<double>(b.data(), b.data() + b.size()));
    }
    if (config.polish) {
        engine.polish(true);
    }
    return engine.beta();
}

Vector log_grid(double lambda_max, double ratio, Index points)
{
    if (points < 1 || !(ratio > 0.0) || !(ratio <= 1.0)) {
        throw ConfigError("log_grid: need points >= 1 and ratio in (0, 1]");
    }
    Vector grid(points);
    if (points == 1) {
        grid(0) = lambda_max;
        return grid;
    }
    const double step = std::log(ratio) / static_cast<double>(points - 1);
    for (Index k = 0; k < points; ++k) {
        grid(k) = lambda_max * std::exp(step * static_cast<double>(k));
    }
    return grid;
}

namespace {

void check_grid(const Vector& grid)
{
    for (Index k = 0; k < grid.size(); ++k) {
        if (!(grid(k) > 0.0)) {
            throw ConfigError("lambda grid must be positive");
        }
        if (k > 0 && !(grid(k) < grid(k - 1))) {
            throw ConfigError("lambda grid must be strictly descending");
        }
    }
}

} // namespace

Matrix lasso_path(const SymMatrix& c, const Vector& d, const Vector& grid, const SolverConfig& config, double gamma)
{
    check_grid(grid);
    if (d.size() != c.dim()) {
        throw ContractError("lasso_path: d length does not match C");
    }
    const Index dim = c.dim();
    Matrix out(dim, grid.size());
    CdEngine engine(c.mat(), d, grid.size() > 0 ? grid(0) : 0.0, gamma);
    engine.start(config.warm_start && config.warm_start->size() == dim ? *config.warm_start : Vector::Zero(dim));
    const double threshold = config.tol * diag_scale(c.mat());
    for (Index k = 0; k < grid.size(); ++k) {
        engine.set_lambda(grid(k));
        int sweeps = 0;
        if (!run_to_convergence(engine, threshold, config.max_sweeps, sweeps)) {
            const Vector& b = engine.beta();
            std::ostringstream os;
            os << "lasso_path: no convergence at lambda " << grid(k) << " (KKT residual " << engine.max_kkt()
               << ", threshold " << threshold << ", sweeps " << sweeps << ")";
            throw NonConvergenceError(os.str(), std::vector<double>(b.data(), b.data() + b.size()));
        }
        out.col(k) = engine.beta();
    }
    return out;
}

Vector lasso_entry_values(const SymMatrix& c, const Vector& d, const Vector& grid, const SolverConfig& config,
                          double gamma)
{
    check_grid(grid);
    if (d.size() != c.dim()) {
        throw ContractError("lasso_entry_values: d length does not match C");
    }
    const Index dim = c.dim();
    Vector entry = Vector::Zero(dim);
    CdEngine engine(c.mat(), d, grid.size() > 0 ? grid(0) : 0.0, gamma);
    engine.start(Vector::Zero(dim));
    const double threshold = config.tol * diag_scale(c.mat());
    Index remaining = dim;
    for (Index k = 0; k < grid.size() && remaining > 0; ++k) {
        engine.set_lambda(grid(k));
        int sweeps = 0;
        if (!run_to_convergence(engine, threshold, config.max_sweeps, sweeps)) {
            const Vector& b = engine.beta();
            std::ostringstream os;
            os << "lasso_entry_values: no convergence at lambda " << grid(k) << " (KKT residual " << engine.max_kkt()
               << ", threshold " << threshold << ", sweeps " << sweeps << ")";
            throw NonConvergenceError(os.str(), std::vector<double>(b.data(), b.data() + b.size()));
        }
        const Vector& b = engine.beta();
        for (Index j = 0; j < dim; ++j) {
            if (entry(j) == 0.0 && std::abs(b(j)) > 1e-10) {
                entry(j) = grid(k);
                --remaining;
            }
        }
    }
    return entry;
}

SqrtLassoResult sqrt_lasso(const SymMatrix& a_gram, const Vector& aty, double yty, Index n, double lambda,
                           const SolverConfig& config)
{
    if (aty.size() != a_gram.dim()) {
        throw ContractError("sqrt_lasso: A^T y length does not match the Gram matrix");
    }
    if (n < 1 || !(lambda >= 0.0) || !(yty >= 0.0)) {
        throw ContractError("sqrt_lasso: need n >= 1, lambda >= 0 and yty >= 0");
    }
    const double floor = 1e-14 * std::max(yty, 1e-300);
    if (yty <= 0.0) {
        throw DegenerateFitError("sqrt_lasso: response has zero norm");
    }
    SqrtLassoResult out;
    out.beta = Vector::Zero(aty.size());
    out.sigma = std::sqrt(yty);
    const int max_outer = 200;
    SolverConfig inner = config;
    for (int it = 0; it < max_outer; ++it) {
        inner.warm_start = out.beta;
        QuadProblem prob{a_gram, aty, lambda * out.sigma, 0.0};
        out.beta = cd_quadratic_lasso(prob, inner);
        const double rss = yty - 2.0 * out.beta.dot(aty) + out.beta.dot(a_gram.mat() * out.beta);
        if (rss <= floor) {
            throw DegenerateFitError("sqrt_lasso: residual vanished (interpolating fit); increase lambda");
        }
        const double next = std::sqrt(rss);
        out.objective_trace.push_back(next + lambda * out.beta.lpNorm<1>());
        out.outer_iterations = it + 1;
        const bool done = std::abs(next - out.sigma) <= 1e-6 * out.sigma;
        out.sigma = next;
        if (done) {
            return out;
        }
    }
    throw NonConvergenceError("sqrt_lasso: scale iteration did not converge",
                              std::vector<double>(out.beta.data(), out.beta.data() + out.beta.size()));
}

CvResult cv_lasso(const Matrix& x, const Vector& y, int folds, const Vector& grid_in, RngStream& rng,
                  const SolverConfig& config)
{
    const Index n = x.rows();
    const Index dim = x.cols();
    if (y.size() != n) {
        throw ContractError("cv_lasso: X and Y row counts differ");
    }
    if (folds < 2 || n < folds) {
        throw ConfigError("cv_lasso: need 2 <= folds <= n (every fold must have rows)");
    }
    const Matrix gram = x.transpose() * x;
    const Vector xty = x.transpose() * y;

    CvResult res;
    res.grid = grid_in;
    if (res.grid.size() == 0) {
        const double lmax = xty.cwiseAbs().maxCoeff() / static_cast<double>(n);
        res.grid = log_grid(lmax > 0.0 ? lmax : 1.0);
    }
    check_grid(res.grid);

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng.engine());
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (Index pos = 0; pos < n; ++pos) {
        fold_of[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = static_cast<int>(pos % folds);
    }

    SolverConfig path_cfg = config;
    path_cfg.polish = false;
    path_cfg.warm_start.reset();
    path_cfg.tol = std::max(config.tol, 1e-7);

    // Per-fold training Grams; all folds walk down the grid together.
    std::vector<Matrix> c_fold(static_cast<std::size_t>(folds));
    std::vector<Vector> d_fold(static_cast<std::size_t>(folds));
    std::vector<Matrix> g_held(static_cast<std::size_t>(folds));
    std::vector<Vector> xy_held(static_cast<std::size_t>(folds));
    std::vector<double> yy_held(static_cast<std::size_t>(folds));
    std::vector<double> n_held(static_cast<std::size_t>(folds));
    for (int f = 0; f < folds; ++f) {
        std::vector<Index> held;
        for (Index i = 0; i < n; ++i) {
            if (fold_of[static_cast<std::size_t>(i)] == f) {
                held.push_back(i);
            }
        }
        const auto nv = static_cast<Index>(held.size());
        const Index nt = n - nv;
        if (nv == 0 || nt == 0) {
            throw ConfigError("cv_lasso: fold with zero rows");
        }
        Matrix xv(nv, dim);
        Vector yv(nv);
        for (Index r = 0; r < nv; ++r) {
            xv.row(r) = x.row(held[static_cast<std::size_t>(r)]);
            yv(r) = y(held[static_cast<std::size_t>(r)]);
        }
        const auto fi = static_cast<std::size_t>(f);
        g_held[fi] = xv.transpose() * xv;
        xy_held[fi] = xv.transpose() * yv;
        yy_held[fi] = yv.squaredNorm();
        n_held[fi] = static_cast<double>(nv);
        const double inv_nt = 1.0 / static_cast<double>(nt);
        c_fold[fi] = (gram - g_held[fi]) * inv_nt;
        c_fold[fi] = (0.5 * (c_fold[fi] + c_fold[fi].transpose())).eval();
        d_fold[fi] = (xty - xy_held[fi]) * inv_nt;
    }
    std::vector<CdEngine> engines;
    engines.reserve(static_cast<std::size_t>(folds));
    for (std::size_t fi = 0; fi < static_cast<std::size_t>(folds); ++fi) {
        engines.emplace_back(c_fold[fi], d_fold[fi], res.grid(0), 0.0);
        engines.back().start(Vector::Zero(dim));
    }

    // Stop once the CV error has not improved for `patience` grid points.
    const Index patience = 10;
    std::vector<double> errors;
    Index best = 0;
    for (Index k = 0; k < res.grid.size(); ++k) {
        double total = 0.0;
        for (std::size_t fi = 0; fi < engines.size(); ++fi) {
            CdEngine& engine = engines[fi];
            engine.set_lambda(res.grid(k));
            int sweeps = 0;
            if (!run_to_convergence(engine, path_cfg.tol * diag_scale(c_fold[fi]), path_cfg.max_sweeps, sweeps)) {
                const Vector& b = engine.beta();
                std::ostringstream os;
                os << "cv_lasso: no convergence at lambda " << res.grid(k) << " in fold " << fi + 1
                   << " (KKT residual " << engine.max_kkt() << ")";
                throw NonConvergenceError(os.str(), std::vector<double>(b.data(), b.data() + b.size()));
            }
            const Vector& b = engine.beta();
            const double sse = yy_held[fi] - 2.0 * b.dot(xy_held[fi]) + b.dot(g_held[fi] * b);
            total += std::max(sse, 0.0) / n_held[fi];
        }
        errors.push_back(total / static_cast<double>(folds));
        if (errors.back() < errors[static_cast<std::size_t>(best)]) {
            best = k;
        }
        if (k - best >= patience) {
            break;
        }
    }
    res.cv_error = Eigen::Map<const Vector>(errors.data(), static_cast<Index>(errors.size()));
    res.best_lambda = res.grid(best);

    const double inv_n = 1.0 / static_cast<double>(n);
    const auto c_full = SymMatrix::symmetrized(gram * inv_n);
    const Vector d_full = xty * inv_n;
    const Matrix full_path = lasso_path(c_full, d_full, Vector(res.grid.head(best + 1)), path_cfg, 0.0);
    res.beta = full_path.col(best);
    return res;
}

} // namespace gk
