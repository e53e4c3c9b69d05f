#include <doctest.h>

#include <gk/knockoff.hpp>
#include <gk/solvers.hpp>

#include "oracles.hpp"

using namespace gk;

TEST_CASE("soft_threshold")
{
    CHECK(soft_threshold(2.5, 1.0) == 1.5);
    CHECK(soft_threshold(-0.5, 1.0) == 0.0);
    CHECK(soft_threshold(-3.0, 1.0) == -2.0);
}

TEST_CASE("cd_quadratic_lasso closed forms")
{
    QuadProblem pr;
    pr.c = SymMatrix::identity(2);
    pr.d = Vector(2);
    pr.d << 2.0, 0.3;
    pr.lambda = 0.5;
    const Vector b = cd_quadratic_lasso(pr);
    CHECK(b(0) == doctest::Approx(1.5));
    CHECK(b(1) == 0.0);

    pr.lambda = 2.0;
    CHECK(cd_quadratic_lasso(pr).isZero());

    RngStream rng(1, 1);
    for (double gamma : {0.0, 0.1, 2.0}) {
        QuadProblem q;
        q.c = SymMatrix::identity(6);
        q.d = rng.normal_vector(6) * 2.0;
        q.lambda = 0.7;
        q.gamma = gamma;
        const Vector got = cd_quadratic_lasso(q);
        for (Index j = 0; j < 6; ++j) {
            const double k = 1.0 + 2.0 * gamma;
            CHECK(got(j) == doctest::Approx(soft_threshold(q.d(j) / k, q.lambda / k)).epsilon(1e-12));
        }
    }
}

TEST_CASE("cd_quadratic_lasso matches proximal gradient on random PD problems")
{
    RngStream rng(2, 2);
    for (int rep = 0; rep < 5; ++rep) {
        const Matrix c = oracle::random_spd(rng, 10, 0.3);
        const Vector d = rng.normal_vector(10);
        const double lambda = 0.1 + 0.1 * rep;
        QuadProblem pr{SymMatrix::symmetrized(c), d, lambda, 0.0};
        const Vector b = cd_quadratic_lasso(pr);
        const Vector ref = oracle::proximal_gradient(c, d, lambda, 0.0, 20000);
        CHECK(oracle::lasso_objective(c, d, lambda, 0.0, b) ==
              doctest::Approx(oracle::lasso_objective(c, d, lambda, 0.0, ref)).epsilon(1e-6));
        CHECK(kkt_residual(pr, b) <= 1e-9);
    }
}

TEST_CASE("non-convergence carries the last iterate")
{
    RngStream rng(3, 3);
    const Matrix c = oracle::random_spd(rng, 30, 0.01);
    QuadProblem pr{SymMatrix::symmetrized(c), rng.normal_vector(30), 1e-4, 0.0};
    SolverConfig cfg;
    cfg.max_sweeps = 1;
    cfg.polish = false;
    try {
        cd_quadratic_lasso(pr, cfg);
        FAIL("expected NonConvergenceError");
    } catch (const NonConvergenceError& e) {
        CHECK(e.last_iterate().size() == 30);
    }
}

TEST_CASE("flip-sign swap property on the knockoff Gram")
{
    const Index p = 8;
    const SymMatrix sigma = ar1_correlation(p, 0.5);
    const KnockoffModel m = build_model(sigma, solve_s_sdp(sigma));
    const SymMatrix g = m.joint_gram();
    const double gamma = default_ridge(g);
    RngStream rng(4, 4);
    for (int rep = 0; rep < 20; ++rep) {
        const Vector d = rng.normal_vector(2 * p);
        std::vector<Index> perm(2 * p);
        for (Index j = 0; j < 2 * p; ++j) {
            perm[j] = j;
        }
        for (Index j = 0; j < p; ++j) {
            if (rng.uniform() < 0.5) {
                std::swap(perm[j], perm[j + p]);
            }
        }
        Vector dsw(2 * p);
        for (Index j = 0; j < 2 * p; ++j) {
            dsw(j) = d(perm[j]);
        }
        const double lambda = 0.05 + 0.2 * rng.uniform();
        const Vector b = cd_quadratic_lasso({g, d, lambda, gamma});
        const Vector bsw = cd_quadratic_lasso({g, dsw, lambda, gamma});
        for (Index j = 0; j < 2 * p; ++j) {
            CHECK(std::abs(bsw(j) - b(perm[j])) <= 1e-8);
        }
    }
}

TEST_CASE("lasso_entry_values")
{
    Vector d(2);
    d << 3.0, 1.0;
    const Vector grid = log_grid(3.0);
    CHECK(grid.size() == 100);
    CHECK(grid(0) == doctest::Approx(3.0));
    CHECK(grid(99) == doctest::Approx(0.003));
    const double step = grid(0) / grid(1);
    const Vector e = lasso_entry_values(SymMatrix::identity(2), d, grid);
    CHECK(e(0) <= 3.0);
    CHECK(e(0) >= 3.0 / step);
    CHECK(e(1) <= 1.0);
    CHECK(e(1) >= 1.0 / step);

    CHECK(lasso_entry_values(SymMatrix::identity(2), Vector::Zero(2), grid).isZero());

    RngStream rng(6, 6);
    const SymMatrix c = SymMatrix::symmetrized(oracle::random_spd(rng, 6));
    const Vector dd = rng.normal_vector(6);
    const Vector base = lasso_entry_values(c, dd, log_grid(dd.cwiseAbs().maxCoeff()));
    // symmetric permutation of both C and d permutes entries
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
    perm.indices() << 3, 1, 5, 0, 2, 4;
    const Matrix cp = perm * c.mat() * perm.transpose();
    const Vector dp = perm * dd;
    const Vector got = lasso_entry_values(SymMatrix::symmetrized(cp), dp, log_grid(dd.cwiseAbs().maxCoeff()));
    CHECK((got - perm * base).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sqrt_lasso")
{
    RngStream rng(7, 7);
    const Matrix a = gaussian_matrix(rng, 40, 5);
    const Vector y = a.col(0) + rng.normal_vector(40);
    const SymMatrix gram = SymMatrix::symmetrized(a.transpose() * a);
    const Vector aty = a.transpose() * y;
    const double yty = y.squaredNorm();

    const SqrtLassoResult big = sqrt_lasso(gram, aty, yty, 40, 1e6);
    CHECK(big.beta.isZero());
    CHECK(big.sigma == doctest::Approx(std::sqrt(yty)));

    const SqrtLassoResult r = sqrt_lasso(gram, aty, yty, 40, 2.0);
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
        CHECK(r.objective_trace[i] <= r.objective_trace[i - 1] + 1e-9);
    }

    // scalar problem: stationarity (aty - c b) / sigma(b) = lambda for b > 0
    const double c1 = gram(0, 0);
    const double d1 = aty(0);
    const double lambda = 0.5 * d1 / std::sqrt(yty);
    const SymMatrix g1(Matrix::Constant(1, 1, c1));
    const SqrtLassoResult r1 = sqrt_lasso(g1, Vector::Constant(1, d1), yty, 40, lambda);
    auto f = [&](double b) { return (d1 - c1 * b) / std::sqrt(yty - 2.0 * b * d1 + c1 * b * b) - lambda; };
    double lo = 0.0;
    double hi = d1 / c1;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    CHECK(r1.beta(0) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-6));

    // interpolation
    const Vector ys = Vector::Ones(3);
    CHECK_THROWS_AS(sqrt_lasso(SymMatrix::identity(3), ys, 3.0, 3, 1e-6), DegenerateFitError);
}

TEST_CASE("cv_lasso")
{
    int heavy = 0;
    const int seeds = 50;
    for (int s = 0; s < seeds; ++s) {
        RngStream rng(100 + s, 1);
        const Matrix x = gaussian_matrix(rng, 100, 10);
        const Vector y = rng.normal_vector(100);
        const CvResult r = cv_lasso(x, y, 10, {}, rng);
        Index pos = 0;
        while (pos < r.grid.size() && r.grid(pos) > r.best_lambda) {
            ++pos;
        }
        heavy += pos < r.grid.size() / 4;
    }
    CHECK(heavy >= 40);

    int hits = 0;
    for (int s = 0; s < 20; ++s) {
        RngStream rng(200 + s, 1);
        const Matrix x = gaussian_matrix(rng, 400, 10);
        const Vector y = 1.0 * x.col(3) + rng.normal_vector(400);
        const CvResult r = cv_lasso(x, y, 10, {}, rng);
        hits += r.beta(3) != 0.0;
    }
    CHECK(hits >= 16);

    RngStream rng(9, 9);
    const Matrix x = gaussian_matrix(rng, 12, 3);
    const Vector y = x.col(0) + rng.normal_vector(12);
    const CvResult loo = cv_lasso(x, y, 12, {}, rng);
    CHECK(loo.cv_error.size() > 0);
    CHECK(loo.cv_error.allFinite());
    CHECK_THROWS_AS(cv_lasso(x, y, 13, {}, rng), ConfigError);
    CHECK_THROWS_AS(cv_lasso(x, y, 1, {}, rng), ConfigError);
}
