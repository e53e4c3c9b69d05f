#pragma once

#include <gk/pipelines.hpp>

namespace gk {

/// Conditional law of X_j given X_{-j}: X_j = X_{-j} gamma + N(0, v).
struct ConditionalParams
{
    Vector gamma;  // length p - 1, indexed over -j in increasing order
    double v = 0.0;
};

ConditionalParams conditional_params(const SymMatrix& sigma, Index j);

struct CrtOptions
{
    /// Compare the signed resampled statistic against |xty_j| (the literal
    /// reading); the default compares absolute values on both sides.
    bool literal = false;
    /// Upper bound on B * p lasso refits for ghost_crt_lasso.
    long long max_refits = 2'000'000;
};

/// p_j = (1 + #{b : T_b >= T_obs}) / (B + 1). Feature j uses rng.derive(j).
Vector ghost_crt_marginal(const SummaryStats& stats, const SymMatrix& sigma, int draws, const RngStream& rng,
                          const CrtOptions& options = {});

Vector ghost_crt_lasso(const FullSummaryStats& stats, const SymMatrix& sigma, int draws, double lambda,
                       const RngStream& rng, const CrtOptions& options = {}, const SolverConfig& config = {});

} // namespace gk
