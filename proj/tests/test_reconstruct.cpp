#include <doctest.h>

#include <gk/reconstruct.hpp>

#include "oracles.hpp"

using namespace gk;

namespace {

Matrix bordered_of(const SurrogateData& s)
{
    Matrix a(s.x_check.rows(), s.x_check.cols() + 1);
    a << s.x_check, s.y_check;
    return a.transpose() * a;
}

FullSummaryStats random_stats(RngStream& rng, Index n, Index p)
{
    const Matrix x = gaussian_matrix(rng, n, p);
    const Vector y = x.col(0) + gaussian_matrix(rng, n, 1).col(0);
    return FullSummaryStats::from_data(x, y);
}

} // namespace

TEST_CASE("identity bordered Gram gives [I; 0]")
{
    FullSummaryStats st;
    st.xtx = SymMatrix::identity(3);
    st.xty = Vector::Zero(3);
    st.yty = 1.0;
    st.n = 6;
    const SurrogateData s = reconstruct_surrogate(st);
    CHECK(s.x_check.rows() == 6);
    Matrix a(6, 4);
    a << s.x_check, s.y_check;
    // eigenvectors of I are only defined up to rotation; the Gram is what matters
    CHECK((a.transpose() * a - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(a.bottomRows(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("round trip n = 50, p = 10")
{
    RngStream rng(21, 1);
    const FullSummaryStats st = random_stats(rng, 50, 10);
    const SurrogateData s = reconstruct_surrogate(st);
    CHECK(s.x_check.rows() == 50);
    const Matrix want = st.bordered().mat();
    CHECK((bordered_of(s) - want).cwiseAbs().maxCoeff() <= 1e-8 * want.cwiseAbs().maxCoeff());
}

TEST_CASE("truncated route n = 5, p = 10")
{
    RngStream rng(22, 1);
    const FullSummaryStats st = random_stats(rng, 5, 10);
    const SurrogateData s = reconstruct_surrogate(st);
    CHECK(s.x_check.rows() == 5);
    const Matrix want = st.bordered().mat();
    CHECK((bordered_of(s) - want).cwiseAbs().maxCoeff() <= 1e-8 * want.cwiseAbs().maxCoeff());
}

TEST_CASE("round trip property and scale equivariance")
{
    RngStream rng(23, 1);
    for (int rep = 0; rep < 10; ++rep) {
        const Index p = 2 + static_cast<Index>(rng.below(15));
        const Index n = 3 + static_cast<Index>(rng.below(40));
        const FullSummaryStats st = random_stats(rng, n, p);
        const SurrogateData s = reconstruct_surrogate(st);
        const Matrix want = st.bordered().mat();
        CHECK((bordered_of(s) - want).cwiseAbs().maxCoeff() <= 1e-8 * want.cwiseAbs().maxCoeff());

        FullSummaryStats scaled = st;
        const double c = 3.0;
        scaled.xtx = SymMatrix::symmetrized(c * c * st.xtx.mat());
        scaled.xty = c * c * st.xty;
        scaled.yty = c * c * st.yty;
        const SurrogateData s2 = reconstruct_surrogate(scaled);
        CHECK((s2.x_check - c * s.x_check).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + s2.x_check.cwiseAbs().maxCoeff()));
        CHECK((s2.y_check - c * s.y_check).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + s2.y_check.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("invalid summary is rejected")
{
    FullSummaryStats st;
    st.xtx = SymMatrix::identity(2);
    st.xty = Vector::Constant(2, 5.0);
    st.yty = 1.0;
    st.n = 10;
    CHECK_THROWS_AS(reconstruct_surrogate(st), InvalidSummaryError);
}

TEST_CASE("assemble_gram")
{
    CHECK(assemble_gram(Matrix::Zero(3, 2), Matrix::Zero(3, 2), Vector::Zero(3)).mat().isZero());

    Matrix xc(2, 1);
    xc << 1.0, 0.0;
    Matrix xk(2, 1);
    xk << 0.0, 1.0;
    Vector y(2);
    y << 1.0, 1.0;
    Matrix want(3, 3);
    want << 1, 0, 1, 0, 1, 1, 1, 1, 2;
    CHECK(assemble_gram(xc, xk, y).mat() == want);

    RngStream rng(5, 5);
    const Matrix a = gaussian_matrix(rng, 20, 4);
    const Matrix b = gaussian_matrix(rng, 20, 4);
    const Vector v = rng.normal_vector(20);
    Matrix all(20, 9);
    all << a, b, v;
    const Matrix brute = all.transpose() * all;
    CHECK((assemble_gram(a, b, v).mat() - brute).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + brute.cwiseAbs().maxCoeff()));

    CHECK_THROWS_AS(assemble_gram(a, Matrix::Zero(19, 4), v), ContractError);
}
