#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <gk/numkit.hpp>

namespace gk {

/// Z-scores of K studies over a common variant list. Missing entries are NaN.
struct StudyPanel
{
    Matrix z;        // variants x studies
    Vector n;        // sample size per study
    SymMatrix cor_s; // K x K study correlation

    Index studies() const { return z.cols(); }
    Index variants() const { return z.rows(); }
    bool observed(Index variant, Index study) const { return !std::isnan(z(variant, study)); }
    void validate() const;
};

/// Pearson correlation over variants observed in both studies with
/// |z| <= 1.96 in both; at least `min_shared` such variants per pair.
SymMatrix estimate_study_correlation(const Matrix& z, Index min_shared = 10);

/// argmin w^T corS w  s.t.  sum w_k sqrt(n_k) = 1, w >= 0 (support enumeration).
Vector solve_meta_weights(const SymMatrix& cor_s, const Vector& n);

/// Combined Z-scores; variants observed in no study come back as NaN.
Vector meta_zscore(const StudyPanel& panel, const Vector& w);

/// Two-sided normal p-value 2 (1 - Phi(|z|)).
double two_sided_pvalue(double z);

} // namespace gk
