#pragma once

#include <limits>
#include <vector>

#include <gk/knockoff.hpp>

namespace gk {

/// Column 0 holds the original importance, columns 1..M the knockoff copies.
struct ImportanceTable
{
    Matrix z;

    Index entities() const { return z.rows(); }
    int copies() const { return static_cast<int>(z.cols()) - 1; }
    void validate() const;
};

struct SelectionResult
{
    std::vector<Index> selected;  // zero-based, ascending
    double threshold = std::numeric_limits<double>::infinity();
    double q = 0.2;
    Vector w;
    /// Only filled by the multi-copy rule.
    std::vector<int> kappa;
    Vector tau;
};

struct ThresholdResult
{
    double threshold = std::numeric_limits<double>::infinity();
    std::vector<Index> selected;
};

/// Knockoff+ threshold over the candidates {|W_j|} \ {0}.
ThresholdResult knockoff_threshold(const Vector& w, double q);

/// (kappa, tau) filter for M >= 2; M = 1 falls back to W = Z0 - Z1.
SelectionResult multi_knockoff_filter(const ImportanceTable& table, double q);

/// Sums |beta| over each group, separately for the original block and each
/// knockoff block. `beta` has layout [orig | copy 1 | ... | copy M].
ImportanceTable group_aggregate(const Vector& beta, const GroupPartition& partition, int copies);

/// Step-up rule; returns zero-based indices of rejected hypotheses, ascending.
std::vector<Index> benjamini_hochberg(const Vector& pvals, double q);

/// Median of a sample (midpoint of the two central values for even sizes).
double median_of(std::vector<double> values);

} // namespace gk
