#pragma once

#include <optional>
#include <vector>

#include <gk/numkit.hpp>

namespace gk {

/**
 * Quadratic-form lasso
 *
 *     minimize 1/2 b^T C b - d^T b + lambda ||b||_1 + gamma ||b||_2^2
 *
 * C must be PSD (after the ridge) with positive diagonal where the
 * coordinate can move.
 */
struct QuadProblem
{
    SymMatrix c;
    Vector d;
    double lambda = 0.0;
    double gamma = 0.0;
};

struct SolverConfig
{
    /// Stopping threshold on the KKT residual, relative to max(1, max C_jj).
    double tol = 1e-10;
    int max_sweeps = 20000;
    std::optional<Vector> warm_start;
    /// Re-solve the final active set exactly when it is consistent with the
    /// CD signs. Only worth it for one-off solves.
    bool polish = true;
};

double soft_threshold(double x, double t);

/// Ridge gamma with 2*gamma = 1e-6 * trace(C) / dim.
double default_ridge(const SymMatrix& c);

/// Largest KKT violation of `beta` for `problem`.
double kkt_residual(const QuadProblem& problem, const Vector& beta);

double quad_objective(const QuadProblem& problem, const Vector& beta);

/// Cyclic coordinate descent in covariance form (sweep order 0..dim-1).
/// Throws NonConvergenceError (carrying the last iterate) at max_sweeps.
Vector cd_quadratic_lasso(const QuadProblem& problem, const SolverConfig& config = {});

/// Descending log-spaced grid from lambda_max to lambda_max * ratio.
Vector log_grid(double lambda_max, double ratio = 1e-3, Index points = 100);

/**
 * Solves down `grid` (strictly descending, positive) with warm starts and
 * reports, for each coordinate, the largest grid value at which it is
 * nonzero (|b_j| > 1e-10), or 0 if it never enters.
 */
Vector lasso_entry_values(const SymMatrix& c, const Vector& d, const Vector& grid,
                          const SolverConfig& config = {}, double gamma = 0.0);

/// Solutions along a descending grid, warm-started; column k solves grid(k).
Matrix lasso_path(const SymMatrix& c, const Vector& d, const Vector& grid,
                  const SolverConfig& config = {}, double gamma = 0.0);

struct SqrtLassoResult
{
    Vector beta;
    double sigma = 0.0;
    int outer_iterations = 0;
    /// ||Y - A b|| + lambda ||b||_1 after each outer iteration.
    std::vector<double> objective_trace;
};

/**
 * Square-root lasso  min ||Y - A b||_2 + lambda ||b||_1  from Gram quantities,
 * by alternating sigma = ||Y - A b|| with a quadratic lasso at penalty
 * lambda * sigma (the scaled-lasso fixed point).
 */
SqrtLassoResult sqrt_lasso(const SymMatrix& a_gram, const Vector& aty, double yty, Index n,
                           double lambda, const SolverConfig& config = {});

struct CvResult
{
    double best_lambda = 0.0;
    Vector beta;
    Vector grid;
    Vector cv_error;
};

/**
 * K-fold cross-validated lasso on (1/2n)||Y - X b||^2 + lambda ||b||_1.
 * An empty grid means 100 log-spaced values from ||X^T Y||_inf / n down by 1e3.
 * Ties in CV error resolve toward the larger lambda. The folds walk down the
 * grid together and stop once the CV error has not improved for 10 values, so
 * cv_error may be shorter than the grid.
 */
CvResult cv_lasso(const Matrix& x, const Vector& y, int folds, const Vector& grid, RngStream& rng,
                  const SolverConfig& config = {});

} // namespace gk
