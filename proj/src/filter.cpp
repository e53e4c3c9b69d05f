#include <gk/filter.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gk {

void ImportanceTable::validate() const
{
    if (z.cols() < 2) {
        throw ContractError("ImportanceTable: need at least one knockoff copy");
    }
    if (!z.allFinite()) {
        throw ContractError("ImportanceTable: non-finite importance value");
    }
}

namespace {

void check_level(double q)
{
    if (!(q > 0.0) || !(q <= 1.0)) {
        throw ContractError("target level q must lie in (0, 1]");
    }
}

} // namespace

ThresholdResult knockoff_threshold(const Vector& w, double q)
{
    check_level(q);
    std::vector<double> cand;
    cand.reserve(static_cast<std::size_t>(w.size()));
    for (Index j = 0; j < w.size(); ++j) {
        if (w(j) != 0.0) {
            cand.push_back(std::abs(w(j)));
        }
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    // Sorted copies of the positive values and the magnitudes of the negatives
    // let each candidate be counted by binary search.
    std::vector<double> pos;
    std::vector<double> neg;
    for (Index j = 0; j < w.size(); ++j) {
        if (w(j) > 0.0) {
            pos.push_back(w(j));
        } else if (w(j) < 0.0) {
            neg.push_back(-w(j));
        }
    }
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());

    ThresholdResult out;
    for (double t : cand) {
        const auto n_pos = static_cast<double>(pos.end() - std::lower_bound(pos.begin(), pos.end(), t));
        const auto n_neg = static_cast<double>(neg.end() - std::lower_bound(neg.begin(), neg.end(), t));
        if ((1.0 + n_neg) / std::max(n_pos, 1.0) <= q) {
            out.threshold = t;
            break;
        }
    }
    if (std::isfinite(out.threshold)) {
        for (Index j = 0; j < w.size(); ++j) {
            if (w(j) >= out.threshold) {
                out.selected.push_back(j);
            }
        }
    }
    return out;
}

double median_of(std::vector<double> values)
{
    if (values.empty()) {
        throw ContractError("median_of: empty sample");
    }
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    if (m % 2 == 1) {
        return values[m / 2];
    }
    return 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

SelectionResult multi_knockoff_filter(const ImportanceTable& table, double q)
{
    table.validate();
    check_level(q);
    const int m = table.copies();
    const Index rows = table.entities();
    SelectionResult res;
    res.q = q;
    if (m == 1) {
        res.w = table.z.col(0) - table.z.col(1);
        auto thr = knockoff_threshold(res.w, q);
        res.threshold = thr.threshold;
        res.selected = std::move(thr.selected);
        return res;
    }

    res.kappa.resize(static_cast<std::size_t>(rows));
    res.tau.resize(rows);
    res.w.resize(rows);
    for (Index j = 0; j < rows; ++j) {
        int best = 0;
        for (int c = 1; c <= m; ++c) {
            if (table.z(j, c) > table.z(j, best)) {
                best = c;
            }
        }
        std::vector<double> rest;
        rest.reserve(static_cast<std::size_t>(m));
        for (int c = 0; c <= m; ++c) {
            if (c != best) {
                rest.push_back(table.z(j, c));
            }
        }
        res.kappa[static_cast<std::size_t>(j)] = best;
        res.tau(j) = table.z(j, best) - median_of(std::move(rest));
        res.w(j) = best == 0 ? res.tau(j) : -res.tau(j);
    }

    std::vector<double> cand;
    for (Index j = 0; j < rows; ++j) {
        if (res.tau(j) > 0.0) {
            cand.push_back(res.tau(j));
        }
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    const double inv_m = 1.0 / static_cast<double>(m);
    for (double t : cand) {
        double n_orig = 0.0;
        double n_knock = 0.0;
        for (Index j = 0; j < rows; ++j) {
            if (res.tau(j) >= t) {
                (res.kappa[static_cast<std::size_t>(j)] == 0 ? n_orig : n_knock) += 1.0;
            }
        }
        if ((inv_m + inv_m * n_knock) / std::max(n_orig, 1.0) <= q) {
            res.threshold = t;
            break;
        }
    }
    if (std::isfinite(res.threshold)) {
        for (Index j = 0; j < rows; ++j) {
            if (res.kappa[static_cast<std::size_t>(j)] == 0 && res.tau(j) >= res.threshold) {
                res.selected.push_back(j);
            }
        }
    }
    return res;
}

ImportanceTable group_aggregate(const Vector& beta, const GroupPartition& partition, int copies)
{
    const Index p = partition.features();
    if (copies < 1 || beta.size() != p * (copies + 1)) {
        throw ContractError("group_aggregate: coefficient length is not (M+1) * p");
    }
    ImportanceTable t;
    t.z = Matrix::Zero(partition.groups(), copies + 1);
    for (int g = 1; g <= partition.groups(); ++g) {
        for (Index i : partition.members(g)) {
            for (int c = 0; c <= copies; ++c) {
                t.z(g - 1, c) += std::abs(beta(c * p + i));
            }
        }
    }
    return t;
}

std::vector<Index> benjamini_hochberg(const Vector& pvals, double q)
{
    check_level(q);
    const Index m = pvals.size();
    for (Index j = 0; j < m; ++j) {
        if (!(pvals(j) >= 0.0 && pvals(j) <= 1.0)) {
            throw ContractError("benjamini_hochberg: p-value outside [0, 1] at index " + std::to_string(j));
        }
    }
    std::vector<Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return pvals(a) < pvals(b); });
    Index k = 0;
    for (Index i = 0; i < m; ++i) {
        if (pvals(order[static_cast<std::size_t>(i)]) <= q * static_cast<double>(i + 1) / static_cast<double>(m)) {
            k = i + 1;
        }
    }
    std::vector<Index> out(order.begin(), order.begin() + k);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace gk
