#pragma once

#include <vector>

#include <gk/numkit.hpp>

namespace gk {

/**
 * Everything the Gaussian knockoff sampler precomputes for a covariance.
 *
 * With D the (block-)diagonal decoupling matrix and M copies:
 *   P = [I - Sigma^{-1} D, ..., I - Sigma^{-1} D]               (p x Mp)
 *   V = blocks 2D - D Sigma^{-1} D on the diagonal and
 *       D - D Sigma^{-1} D off the diagonal                    (Mp x Mp)
 * V is clamped to PSD before taking its square root.
 */
struct KnockoffModel
{
    SymMatrix sigma;
    Vector s;      // diagonal of D
    Matrix d;      // p x p, diagonal or block-diagonal
    int copies = 1;
    Matrix p_mat;  // p x Mp
    SymMatrix v;
    SymMatrix v_sqrt;

    Index features() const { return sigma.dim(); }
    Index knockoff_dim() const { return sigma.dim() * copies; }

    /// Joint covariance G of [X, Xk_1, ..., Xk_M]: Sigma on the diagonal
    /// blocks and Sigma - D elsewhere.
    SymMatrix joint_gram() const;
};

/// Feature -> group map with ids 1..g, every group nonempty.
class GroupPartition
{
public:
    explicit GroupPartition(std::vector<int> assignments);

    static GroupPartition singletons(Index p);
    /// Consecutive groups of `size` features (last group may be shorter).
    static GroupPartition contiguous(Index p, Index size);

    Index features() const { return static_cast<Index>(assignments_.size()); }
    int groups() const { return groups_; }
    int group_of(Index j) const { return assignments_[static_cast<std::size_t>(j)]; }
    const std::vector<int>& assignments() const { return assignments_; }
    /// Zero-based member indices of group `g` (1-based id), ascending.
    const std::vector<Index>& members(int g) const { return members_[static_cast<std::size_t>(g - 1)]; }

private:
    std::vector<int> assignments_;
    std::vector<std::vector<Index>> members_;
    int groups_ = 0;
};

/// Multiplier (M+1)/M in the multi-knockoff feasibility constraint.
double copy_factor(int copies);

/// Throws ContractError unless every diagonal entry equals 1 within 1e-8.
void require_unit_diagonal(const SymMatrix& sigma, const char* where);

/// s_j = min(1, ((M+1)/M) * lambda_min(Sigma)) for every j.
Vector solve_s_equicorrelated(const SymMatrix& sigma, int copies = 1);

/**
 * Maximizes sum(s) (equivalently minimizes sum |1 - s_j| over s <= 1)
 * subject to 0 <= s <= 1 and ((M+1)/M) Sigma - diag(s) PSD.
 *
 * Uses a log-barrier Newton method; `max_newton` caps the total number of
 * Newton steps. The result is never worse than the equicorrelated point.
 */
Vector solve_s_sdp(const SymMatrix& sigma, int copies = 1, int max_newton = 400);

/// Objective sum_j |1 - s_j|.
double s_objective(const Vector& s);

KnockoffModel build_model(const SymMatrix& sigma, const Vector& s, int copies = 1);

/// Same formulas with an arbitrary symmetric D (block-diagonal for groups).
KnockoffModel build_model_with_d(const SymMatrix& sigma, const Matrix& d, int copies = 1);

/// Group-equicorrelated construction: D = c * blockdiag(Sigma_gg) with
/// c = min(1, ((M+1)/M) * lambda_min(B^{-1/2} Sigma B^{-1/2})).
KnockoffModel build_group_model(const SymMatrix& sigma, const GroupPartition& partition, int copies = 1);

/// Xk = X P + E V^{1/2}, with E an n x Mp standard normal matrix.
Matrix sample_knockoff_matrix(const KnockoffModel& model, const Matrix& x, RngStream& rng);

/// Ghost knockoff Z-scores: P^T xty + sqrt(yty) * V^{1/2} xi.
Vector sample_ghost_zscores(const KnockoffModel& model, const Vector& xty, double yty, RngStream& rng);

/// Covariance -> correlation conversion; `scale` holds the standard
/// deviations so that X^T Y on the correlation scale is xty / scale.
struct Standardized
{
    SymMatrix correlation;
    Vector scale;
};

Standardized standardize_covariance(const SymMatrix& cov);
Vector rescale_xty(const Vector& xty, const Vector& scale);

} // namespace gk
