#include <doctest.h>

#include <gk/numkit.hpp>

#include "oracles.hpp"

using namespace gk;

TEST_CASE("SymMatrix rejects asymmetric and non-finite input")
{
    Matrix m(2, 2);
    m << 1.0, 0.5, 0.4, 1.0;
    CHECK_THROWS_AS(SymMatrix{m}, ContractError);
    try {
        SymMatrix bad{m};
    } catch (const ContractError& e) {
        CHECK(std::string(e.what()).find("(1,2)") != std::string::npos);
    }
    m(1, 0) = std::nan("");
    CHECK_THROWS_AS(SymMatrix{m}, ContractError);
    CHECK_THROWS_AS(SymMatrix{Matrix::Zero(2, 3)}, ContractError);
    m << 1.0, 0.5, 0.5 + 1e-14, 1.0;
    CHECK_NOTHROW(SymMatrix{m});
}

TEST_CASE("sym_eigen: identity and 2x2 closed form")
{
    const auto eye = sym_eigen(SymMatrix::identity(3));
    CHECK(eye.values.isApprox(Vector::Ones(3)));
    CHECK((eye.vectors.transpose() * eye.vectors - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

    Matrix m(2, 2);
    m << 1.0, 0.5, 0.5, 1.0;
    const auto e = sym_eigen(SymMatrix(m));
    CHECK(e.values(0) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(e.values(1) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("sym_eigen: reconstruction and ordering on random 20x20")
{
    RngStream rng(11, 0);
    for (int rep = 0; rep < 5; ++rep) {
        const Matrix a = gaussian_matrix(rng, 20, 20);
        const Matrix m = 0.5 * (a + a.transpose());
        const auto e = sym_eigen(SymMatrix(m));
        const Matrix back = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
        CHECK((back - m).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + m.cwiseAbs().maxCoeff()));
        CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(20, 20)).cwiseAbs().maxCoeff() < 1e-8);
        for (Index i = 1; i < 20; ++i) {
            CHECK(e.values(i - 1) >= e.values(i));
        }
    }
}

TEST_CASE("psd_sqrt: identity, diagonal, square-back and rejection")
{
    CHECK(psd_sqrt(SymMatrix::identity(4)).mat().isApprox(Matrix::Identity(4, 4)));
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 4.0;
    d(1, 1) = 9.0;
    const Matrix r = psd_sqrt(SymMatrix(d)).mat();
    CHECK(r(0, 0) == doctest::Approx(2.0));
    CHECK(r(1, 1) == doctest::Approx(3.0));
    CHECK(std::abs(r(0, 1)) < 1e-14);

    // V of the 2x2 rho = 0.5, s = 1 model: 2I - Sigma^{-1}
    Matrix sigma(2, 2);
    sigma << 1.0, 0.5, 0.5, 1.0;
    const Matrix v = 2.0 * Matrix::Identity(2, 2) - sigma.inverse();
    const Matrix vs = psd_sqrt(SymMatrix::symmetrized(v)).mat();
    CHECK((vs * vs - v).cwiseAbs().maxCoeff() < 1e-6);

    Matrix neg = Matrix::Identity(2, 2);
    neg(1, 1) = -0.1;
    CHECK_THROWS_AS(psd_sqrt(SymMatrix(neg)), NotPsdError);
    neg(1, 1) = -1e-12;
    CHECK_NOTHROW(psd_sqrt(SymMatrix(neg)));
}

TEST_CASE("spd_inverse and cholesky report singular input")
{
    Matrix s = Matrix::Ones(3, 3);
    CHECK_THROWS_AS(spd_inverse(SymMatrix(s)), SingularMatrixError);
    CHECK_THROWS_AS(cholesky_lower(SymMatrix(s)), SingularMatrixError);
    try {
        spd_inverse(SymMatrix(s), "Sigma");
    } catch (const SingularMatrixError& e) {
        CHECK(std::string(e.what()).find("jitter") != std::string::npos);
    }
    RngStream rng(3, 1);
    const Matrix a = oracle::random_spd(rng, 6);
    CHECK((spd_inverse(SymMatrix::symmetrized(a)).mat() * a - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("ar1_correlation entries")
{
    const SymMatrix s = ar1_correlation(5, 0.5);
    CHECK(s(0, 0) == 1.0);
    CHECK(s(0, 3) == doctest::Approx(0.125));
    CHECK(s(4, 2) == doctest::Approx(0.25));
}

TEST_CASE("gaussian_matrix: determinism and moments")
{
    RngStream a(42, 7);
    RngStream b(42, 7);
    CHECK(gaussian_matrix(a, 5, 4) == gaussian_matrix(b, 5, 4));
    RngStream c(42, 8);
    RngStream a2(42, 7);
    CHECK(gaussian_matrix(a2, 5, 4) != gaussian_matrix(c, 5, 4));

    RngStream big(1, 2);
    const Matrix g = gaussian_matrix(big, 1000, 100);
    const double n = static_cast<double>(g.size());
    const double mean = g.sum() / n;
    const double var = (g.array() - mean).square().sum() / (n - 1.0);
    CHECK(std::abs(mean) <= 4.0 / std::sqrt(n));
    CHECK(std::abs(var - 1.0) <= 0.02);

    RngStream bad(1, 1);
    CHECK_THROWS_AS(gaussian_matrix(bad, 0, 3), ContractError);
}

TEST_CASE("derived streams are reproducible and distinct")
{
    RngStream root(5, 0);
    RngStream x = root.derive(3);
    RngStream y = root.derive(3);
    RngStream z = root.derive(4);
    const double vx = x.normal();
    CHECK(vx == y.normal());
    CHECK(vx != z.normal());
}
