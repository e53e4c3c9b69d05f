#include <doctest.h>

#include <gk/meta.hpp>

#include "oracles.hpp"

using namespace gk;

namespace {

double objective(const SymMatrix& c, const Vector& w)
{
    return w.dot(c.mat() * w);
}

StudyPanel panel_of(const Matrix& z, const Vector& n, const SymMatrix& cor)
{
    StudyPanel p;
    p.z = z;
    p.n = n;
    p.cor_s = cor;
    return p;
}

} // namespace

TEST_CASE("estimate_study_correlation")
{
    RngStream rng(1, 1);
    const Vector z = rng.normal_vector(500);
    Matrix dup(500, 2);
    dup << z, z;
    const SymMatrix c = estimate_study_correlation(dup);
    CHECK(c(0, 1) == doctest::Approx(1.0));

    Matrix ind = gaussian_matrix(rng, 10000, 3);
    const SymMatrix ci = estimate_study_correlation(ind);
    CHECK(std::abs(ci(0, 1)) <= 0.05);
    CHECK(std::abs(ci(1, 2)) <= 0.05);
    CHECK(ci(2, 2) == 1.0);

    CHECK(estimate_study_correlation(gaussian_matrix(rng, 50, 1)).mat() == Matrix::Ones(1, 1));

    Matrix sparse = gaussian_matrix(rng, 30, 2);
    for (Index i = 5; i < 30; ++i) {
        sparse(i, 1) = std::nan("");
    }
    try {
        estimate_study_correlation(sparse);
        FAIL("expected EstimationError");
    } catch (const EstimationError& e) {
        CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
}

TEST_CASE("solve_meta_weights")
{
    const Vector w1 = solve_meta_weights(SymMatrix::identity(1), Vector::Constant(1, 100.0));
    CHECK(w1(0) == doctest::Approx(0.1));

    const Vector w2 = solve_meta_weights(SymMatrix::identity(2), Vector::Constant(2, 400.0));
    CHECK(w2(0) == doctest::Approx(1.0 / 40.0));
    CHECK(w2(1) == doctest::Approx(1.0 / 40.0));

    Matrix c(2, 2);
    c << 1.0, 0.99, 0.99, 1.0;
    const SymMatrix cs(c);
    Vector n(2);
    n << 100.0, 900.0;
    const Vector w = solve_meta_weights(cs, n);
    CHECK((w.array() >= 0.0).all());
    CHECK(w.dot(n.cwiseSqrt()) == doctest::Approx(1.0));
    Vector e1 = Vector::Zero(2);
    e1(0) = 0.1;
    Vector e2 = Vector::Zero(2);
    e2(1) = 1.0 / 30.0;
    CHECK(objective(cs, w) <= objective(cs, e1) + 1e-15);
    CHECK(objective(cs, w) <= objective(cs, e2) + 1e-15);

    // random problems against a dense grid search for K = 2
    RngStream rng(2, 2);
    for (int rep = 0; rep < 20; ++rep) {
        const SymMatrix r(oracle::to_correlation(oracle::random_spd(rng, 2, 0.05)));
        Vector nn(2);
        nn << 50.0 + 500.0 * rng.uniform(), 50.0 + 500.0 * rng.uniform();
        const Vector got = solve_meta_weights(r, nn);
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 20000; ++i) {
            const double a = i / 20000.0 / std::sqrt(nn(0));
            Vector cand(2);
            cand << a, (1.0 - a * std::sqrt(nn(0))) / std::sqrt(nn(1));
            best = std::min(best, objective(r, cand));
        }
        CHECK(objective(r, got) <= best + 1e-9);
    }
}

TEST_CASE("meta_zscore")
{
    RngStream rng(3, 3);
    const Matrix z1 = gaussian_matrix(rng, 20, 1);
    const Vector n1 = Vector::Constant(1, 500.0);
    const auto p1 = panel_of(z1, n1, SymMatrix::identity(1));
    CHECK(meta_zscore(p1, solve_meta_weights(p1.cor_s, n1)) == z1.col(0));

    const Matrix z2 = gaussian_matrix(rng, 20, 2);
    const Vector n2 = Vector::Constant(2, 300.0);
    const auto p2 = panel_of(z2, n2, SymMatrix::identity(2));
    const Vector m2 = meta_zscore(p2, solve_meta_weights(p2.cor_s, n2));
    CHECK(((m2 - (z2.col(0) + z2.col(1)) / std::sqrt(2.0)).cwiseAbs().maxCoeff()) < 1e-12);

    Matrix zm = z2;
    zm(4, 0) = std::nan("");
    zm(6, 0) = std::nan("");
    zm(6, 1) = std::nan("");
    const auto pm = panel_of(zm, n2, SymMatrix::identity(2));
    const Vector mm = meta_zscore(pm, solve_meta_weights(pm.cor_s, n2));
    CHECK(mm(4) == doctest::Approx(zm(4, 1)).epsilon(1e-14));
    CHECK(std::isnan(mm(6)));

    // reordering the studies leaves the result unchanged
    Matrix c(3, 3);
    c << 1, 0.3, 0.1, 0.3, 1, 0.2, 0.1, 0.2, 1;
    Vector n3(3);
    n3 << 100, 400, 250;
    const Matrix z3 = gaussian_matrix(rng, 30, 3);
    const auto a = panel_of(z3, n3, SymMatrix(c));
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(3);
    perm.indices() << 2, 0, 1;
    const auto b = panel_of(z3 * perm.transpose(), perm * n3, SymMatrix::symmetrized(perm * c * perm.transpose()));
    const Vector ma = meta_zscore(a, solve_meta_weights(a.cor_s, a.n));
    const Vector mb = meta_zscore(b, solve_meta_weights(b.cor_s, b.n));
    CHECK((ma - mb).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("meta z-scores have unit variance under the null with correlated studies")
{
    Matrix c(3, 3);
    c << 1, 0.4, 0.2, 0.4, 1, 0.3, 0.2, 0.3, 1;
    const SymMatrix cs(c);
    const Matrix l = cholesky_lower(cs);
    RngStream rng(4, 4);
    const Matrix z = gaussian_matrix(rng, 10000, 3) * l.transpose();
    Vector n(3);
    n << 1000, 3000, 2000;
    const auto panel = panel_of(z, n, cs);
    const Vector m = meta_zscore(panel, solve_meta_weights(cs, n));
    const double mean = m.mean();
    const double var = (m.array() - mean).square().sum() / (m.size() - 1.0);
    CHECK(var >= 0.9);
    CHECK(var <= 1.1);
    CHECK(two_sided_pvalue(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-9));
}
