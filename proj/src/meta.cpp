#include <gk/meta.hpp>

#include <cmath>
#include <limits>

namespace gk {

void StudyPanel::validate() const
{
    const Index k = studies();
    if (k < 1) {
        throw ContractError("StudyPanel: no studies");
    }
    if (n.size() != k || cor_s.dim() != k) {
        throw ContractError("StudyPanel: sizes and study correlation must have one entry per study");
    }
    for (Index s = 0; s < k; ++s) {
        if (!(n(s) > 0.0)) {
            throw ContractError("StudyPanel: sample size of study " + std::to_string(s + 1) + " must be positive");
        }
        if (std::abs(cor_s(s, s) - 1.0) > 1e-8) {
            throw ContractError("StudyPanel: study correlation must have unit diagonal");
        }
    }
    if (min_eigenvalue(cor_s) < -1e-6) {
        throw NotPsdError("StudyPanel: study correlation is not PSD");
    }
}

SymMatrix estimate_study_correlation(const Matrix& z, Index min_shared)
{
    const Index k = z.cols();
    Matrix c = Matrix::Identity(k, k);
    auto usable = [&](Index i, Index s) {
        const double v = z(i, s);
        return !std::isnan(v) && std::abs(v) <= 1.96;
    };
    for (Index a = 0; a < k; ++a) {
        for (Index b = a + 1; b < k; ++b) {
            double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
            Index count = 0;
            for (Index i = 0; i < z.rows(); ++i) {
                if (!usable(i, a) || !usable(i, b)) {
                    continue;
                }
                const double va = z(i, a);
                const double vb = z(i, b);
                sa += va;
                sb += vb;
                saa += va * va;
                sbb += vb * vb;
                sab += va * vb;
                ++count;
            }
            if (count < min_shared) {
                throw EstimationError("estimate_study_correlation: studies " + std::to_string(a + 1) + " and " +
                                      std::to_string(b + 1) + " share only " + std::to_string(count) +
                                      " variants with |z| <= 1.96 (need " + std::to_string(min_shared) + ")");
            }
            const double m = static_cast<double>(count);
            const double cov = sab - sa * sb / m;
            const double va = saa - sa * sa / m;
            const double vb = sbb - sb * sb / m;
            const double r = (va > 0.0 && vb > 0.0) ? cov / std::sqrt(va * vb) : 0.0;
            c(a, b) = r;
            c(b, a) = r;
        }
    }
    Matrix clamped = psd_clamp(SymMatrix::symmetrized(c), 0.0).mat();
    clamped.diagonal().setOnes();
    return SymMatrix::symmetrized(clamped);
}

Vector solve_meta_weights(const SymMatrix& cor_s, const Vector& n)
{
    const Index k = cor_s.dim();
    if (n.size() != k || k < 1) {
        throw ContractError("solve_meta_weights: need one sample size per study");
    }
    if (k > 20) {
        throw ConfigError("solve_meta_weights: more than 20 studies exceeds the enumeration budget");
    }
    for (Index s = 0; s < k; ++s) {
        if (!(n(s) > 0.0)) {
            throw ContractError("solve_meta_weights: sample sizes must be positive");
        }
    }
    const Vector a = n.cwiseSqrt();
    Vector best;
    double best_obj = std::numeric_limits<double>::infinity();
    int best_size = 0;
    const unsigned long subsets = 1UL << static_cast<unsigned>(k);
    for (unsigned long mask = 1; mask < subsets; ++mask) {
        std::vector<Index> support;
        for (Index s = 0; s < k; ++s) {
            if (mask & (1UL << static_cast<unsigned>(s))) {
                support.push_back(s);
            }
        }
        const auto m = static_cast<Index>(support.size());
        Matrix cs(m, m);
        Vector as(m);
        for (Index i = 0; i < m; ++i) {
            as(i) = a(support[static_cast<std::size_t>(i)]);
            for (Index j = 0; j < m; ++j) {
                cs(i, j) = cor_s(support[static_cast<std::size_t>(i)], support[static_cast<std::size_t>(j)]);
            }
        }
        const Vector u = cs.completeOrthogonalDecomposition().pseudoInverse() * as;
        const double denom = as.dot(u);
        if (!(denom > 0.0)) {
            continue;
        }
        const Vector ws = u / denom;
        if (ws.minCoeff() < -1e-12) {
            continue;
        }
        Vector w = Vector::Zero(k);
        for (Index i = 0; i < m; ++i) {
            w(support[static_cast<std::size_t>(i)]) = std::max(ws(i), 0.0);
        }
        w /= a.dot(w);
        const double obj = w.dot(cor_s.mat() * w);
        const double tie = 1e-12 * std::max(1.0, std::abs(best_obj));
        if (obj < best_obj - tie || (std::abs(obj - best_obj) <= tie && static_cast<int>(m) > best_size)) {
            best = w;
            best_obj = obj;
            best_size = static_cast<int>(m);
        }
    }
    if (best.size() == 0) {
        throw DegenerateFitError("solve_meta_weights: no feasible support");
    }
    return best;
}

Vector meta_zscore(const StudyPanel& panel, const Vector& w)
{
    panel.validate();
    const Index k = panel.studies();
    if (w.size() != k) {
        throw ContractError("meta_zscore: need one weight per study");
    }
    Vector out(panel.variants());
    for (Index i = 0; i < panel.variants(); ++i) {
        double num = 0.0;
        double var = 0.0;
        bool any = false;
        Index seen = 0;
        Index last = 0;
        for (Index a = 0; a < k; ++a) {
            if (panel.observed(i, a)) {
                ++seen;
                last = a;
            }
        }
        if (seen == 1 && w(last) > 0.0) {
            out(i) = panel.z(i, last);
            continue;
        }
        for (Index a = 0; a < k; ++a) {
            if (!panel.observed(i, a)) {
                continue;
            }
            any = true;
            num += w(a) * panel.z(i, a);
            for (Index b = 0; b < k; ++b) {
                if (panel.observed(i, b)) {
                    var += w(a) * w(b) * panel.cor_s(a, b);
                }
            }
        }
        out(i) = (any && var > 0.0) ? num / std::sqrt(var) : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

double two_sided_pvalue(double z)
{
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

} // namespace gk
