#pragma once

#include <optional>

#include <gk/filter.hpp>
#include <gk/knockoff.hpp>
#include <gk/reconstruct.hpp>
#include <gk/solvers.hpp>

namespace gk {

/// The minimal summary input (X^T Y, ||Y||^2, n).
struct SummaryStats
{
    Vector xty;
    double yty = 0.0;
    Index n = 0;

    Index features() const { return xty.size(); }
    void validate() const;

    static SummaryStats from_data(const Matrix& x, const Vector& y);
    static SummaryStats from_full(const FullSummaryStats& full);
};

enum class TuningKind { fixed, sqrt_lasso_mc, lasso_min, pseudo_sum };

struct TuningRule
{
    TuningKind kind = TuningKind::fixed;
    double lambda = 0.0;  // fixed
    double kappa = 1.0;
    int mc_samples = 1;
    Index grid_size = 100;
    double train_share = 0.8;
    /// lasso-min only: estimate sigma with X in place of [X Xk].
    bool reduced_sigma = false;

    void validate() const;

    static TuningRule fixed(double lambda);
    static TuningRule sqrt_lasso(double kappa = 0.3, int mc_samples = 200);
    static TuningRule lasso_min(double kappa = 0.6, int mc_samples = 10);
    static TuningRule pseudo_sum(Index grid_size = 100, double train_share = 0.8);
};

enum class KnownCovStatistic { fixed_lambda, sqrtlasso, lassomax };

/// Turns a per-slot importance vector of length (M+1)p into an ImportanceTable.
ImportanceTable slot_table(const Vector& importance, Index p, int copies);

SelectionResult gk_marginal(const SummaryStats& stats, const KnockoffModel& model, double q, RngStream& rng);

/**
 * Importance of every slot of A = [X, Xk] for the known-covariance
 * statistics: |beta| for fixed lambda and square-root lasso, the entry
 * value for lasso-max. Works on real or surrogate rows alike.
 */
Vector known_cov_importance(const Matrix& x, const Matrix& x_knock, const Vector& y, KnownCovStatistic statistic,
                            const TuningRule& tuning, RngStream& rng, const SolverConfig& config = {});

/// Monte Carlo estimate of kappa * E[ ||A^T e||_inf / ||e|| ], e ~ N(0, I_n).
double sqrt_lasso_lambda(const Matrix& a, double kappa, int mc_samples, RngStream& rng);

SelectionResult gk_known_cov(const FullSummaryStats& stats, const KnockoffModel& model, KnownCovStatistic statistic,
                             const TuningRule& tuning, double q, RngStream& rng, const SolverConfig& config = {});

/// Individual-level counterpart of gk_known_cov (samples Xk from X itself).
SelectionResult kf_known_cov(const Matrix& x, const Vector& y, const KnockoffModel& model, KnownCovStatistic statistic,
                             const TuningRule& tuning, double q, RngStream& rng, const SolverConfig& config = {});

/// Pseudo-lasso problem for a given ghost draw: C = G + ridge,
/// d = [xty ; ghost] / n.
QuadProblem pseudolasso_problem(const SummaryStats& stats, const KnockoffModel& model, const Vector& ghost,
                                double lambda);

/// Noise-level estimate used by lasso-min; `ghost` is P^T xty + sqrt(yty) Z.
double pseudo_sigma_hat(const SummaryStats& stats, const KnockoffModel& model, const Vector& ghost,
                        bool reduced = false);

double tune_lasso_min(const SummaryStats& stats, const KnockoffModel& model, const Vector& ghost,
                      const TuningRule& rule, RngStream& rng);

double tune_pseudo_sum(const SummaryStats& stats, const KnockoffModel& model, const Vector& ghost,
                       const TuningRule& rule, RngStream& rng, const SolverConfig& config = {});

struct PseudoLassoFit
{
    double lambda = 0.0;
    Vector ghost;
    Vector beta;
};

PseudoLassoFit pseudolasso_fit(const SummaryStats& stats, const KnockoffModel& model, const TuningRule& tuning,
                               RngStream& rng, const SolverConfig& config = {});

/// `partition` switches to group importances (sum of |beta| per group).
SelectionResult gk_pseudolasso(const SummaryStats& stats, const KnockoffModel& model, const TuningRule& tuning,
                               double q, RngStream& rng, const GroupPartition* partition = nullptr,
                               const SolverConfig& config = {});

SelectionResult kf_lassocv(const Matrix& x, const Vector& y, const KnockoffModel& model, double q, int folds,
                           RngStream& rng, const SolverConfig& config = {});

} // namespace gk
