#include <gk/simharness.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <thread>

namespace gk {

void SimDesign::validate() const
{
    if (n < 1 || p < 1) {
        throw ConfigError("design: n and p must be positive");
    }
    if (k_nonnull < 0 || k_nonnull > p) {
        throw ConfigError("design: k_nonnull must lie in [0, p]");
    }
    if (sigma_kind == SigmaKind::ar1 && !(rho >= 0.0 && rho <= 0.95)) {
        throw ConfigError("design: rho must lie in [0, 0.95]");
    }
    if (replications < 1) {
        throw ConfigError("design: replications must be at least 1");
    }
    if (!std::isfinite(amplitude)) {
        throw ConfigError("design: amplitude must be finite");
    }
}

SymMatrix SimDesign::sigma() const
{
    if (sigma_kind == SigmaKind::identity) {
        return SymMatrix::identity(p);
    }
    return ar1_correlation(p, rho);
}

std::string SimDesign::label() const
{
    std::ostringstream os;
    os << "n" << n << "_p" << p << "_" << (sigma_kind == SigmaKind::identity ? "identity" : "ar1") << "_rho" << rho
       << "_amp" << amplitude;
    return os.str();
}

Dataset generate_dataset(const SimDesign& design, RngStream& rng)
{
    design.validate();
    const Index n = design.n;
    const Index p = design.p;
    Dataset ds;
    const Matrix e = gaussian_matrix(rng, n, p);
    if (design.sigma_kind == SigmaKind::identity) {
        ds.x = e;
    } else {
        const Matrix l = cholesky_lower(design.sigma(), "design covariance");
        ds.x = e * l.transpose();
    }
    std::vector<Index> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), Index{0});
    for (Index k = 0; k < design.k_nonnull; ++k) {
        const auto pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(p - k))) + k;
        std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick)]);
    }
    ds.support.assign(idx.begin(), idx.begin() + design.k_nonnull);
    std::sort(ds.support.begin(), ds.support.end());
    ds.beta = Vector::Zero(p);
    for (Index j : ds.support) {
        ds.beta(j) = rng.uniform() < 0.5 ? -design.amplitude : design.amplitude;
    }
    ds.y = ds.x * ds.beta + std::sqrt(static_cast<double>(n)) * rng.normal_vector(n);
    return ds;
}

Outcome summarize(const std::vector<Index>& selected, const std::vector<Index>& support, Index k_nonnull)
{
    Index hits = 0;
    for (Index j : selected) {
        if (std::binary_search(support.begin(), support.end(), j)) {
            ++hits;
        }
    }
    Outcome o;
    const auto n_sel = static_cast<double>(selected.size());
    o.fdp = selected.empty() ? 0.0 : (n_sel - static_cast<double>(hits)) / n_sel;
    o.power = k_nonnull > 0 ? static_cast<double>(hits) / static_cast<double>(k_nonnull) : 0.0;
    return o;
}

std::vector<std::string> method_names()
{
    return {"gk-marginal", "gk-lasso",  "gk-sqrtlasso", "gk-lassomax", "gk-pseudolasso-lassomin",
            "gk-pseudolasso-pseudosum", "kf-lasso", "kf-lassocv"};
}

Method make_method(const std::string& name, const MethodOptions& opt)
{
    auto full_stats = [](const Dataset& ds) { return FullSummaryStats::from_data(ds.x, ds.y); };
    MethodFn fn;
    if (name == "gk-marginal") {
        fn = [](const Dataset& ds, const MethodContext& ctx, RngStream& rng) {
            return gk_marginal(SummaryStats::from_data(ds.x, ds.y), ctx.model, ctx.q, rng).selected;
        };
    } else if (name == "gk-lasso") {
        fn = [opt, full_stats](const Dataset& ds, const MethodContext& ctx, RngStream& rng) {
            const auto rule = TuningRule::fixed(opt.lambda_per_n * static_cast<double>(ds.x.rows()));
            return gk_known_cov(full_stats(ds), ctx.model, KnownCovStatistic::fixed_lambda, rule, ctx.q, rng)
                .selected;
        };
    } else if (name == "kf-lasso") {
        fn = [opt](const Dataset& ds, const MethodContext& ctx, RngStream& rng) {
            const auto rule = TuningRule::fixed(opt.lambda_per_n * static_cast<double>(ds.x.rows()));
            return kf_known_cov(ds.x, ds.y, ctx.model, KnownCovStatistic::fixed_lambda, rule, ctx.q, rng).selected;
        };
    } else if (name == "gk-sqrtlasso") {
        fn = [opt, full_stats](const Dataset& ds, const MethodContext& ctx, RngStream& rng) {
            const auto rule = TuningRule::sqrt_lasso(opt.sqrt_kappa, opt.sqrt_mc_samples);
            return gk_known_cov(full_stats(ds), ctx.model, KnownCovStatistic::sqrtlasso, rule, ctx.q, rng).selected;
        };
    } else if (name == "gk-lassomax") {
        fn = [full_stats](const Dataset& ds, const MethodContext& ctx, RngStream& rng) {
            TuningRule rule;
            return gk_known_cov(full_stats(ds), ctx.model, KnownCovStatistic::lassomax, rule, ctx.q, rng).selected;
        };
    } else if (name == "gk-pseudolasso-lassomin") {
        fn = [opt](const Dataset& ds, const MethodContext& ctx, RngStream& rng) {
            const auto rule = TuningRule::lasso_min(opt.lasso_min_kappa);
            return gk_pseudolasso(SummaryStats::from_data(ds.x, ds.y), ctx.model, rule, ctx.q, rng).selected;
        };
    } else if (name == "gk-pseudolasso-pseudosum") {
        fn = [](const Dataset& ds, const MethodContext& ctx, RngStream& rng) {
            const auto rule = TuningRule::pseudo_sum();
            return gk_pseudolasso(SummaryStats::from_data(ds.x, ds.y), ctx.model, rule, ctx.q, rng).selected;
        };
    } else if (name == "kf-lassocv") {
        fn = [opt](const Dataset& ds, const MethodContext& ctx, RngStream& rng) {
            return kf_lassocv(ds.x, ds.y, ctx.model, ctx.q, opt.cv_folds, rng).selected;
        };
    } else {
        throw ConfigError("unknown method '" + name + "'");
    }
    return Method{name, fn};
}

std::uint64_t replicate_stream(int replicate, std::string_view tag)
{
    return splitmix64(splitmix64(static_cast<std::uint64_t>(replicate)) ^ hash_string(tag));
}

KnockoffModel design_model(const SimDesign& design)
{
    const SymMatrix sigma = design.sigma();
    const Vector s = design.sigma_kind == SigmaKind::identity ? Vector::Ones(design.p) : solve_s_sdp(sigma);
    return build_model(sigma, s);
}

std::pair<double, double> mean_and_se(const std::vector<double>& values)
{
    if (values.empty()) {
        return {0.0, 0.0};
    }
    const auto r = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / r;
    if (values.size() < 2) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / (r - 1.0)) / std::sqrt(r)};
}

namespace {

struct Cell
{
    bool ok = false;
    Outcome outcome;
    double seconds = 0.0;
};

} // namespace

ExperimentResult run_experiment(const std::vector<SimDesign>& designs, const std::vector<Method>& methods,
                                const std::vector<double>& q_levels, int workers)
{
    ExperimentResult result;
    result.designs = designs;
    const std::size_t n_methods = methods.size();
    const std::size_t n_q = q_levels.size();
    workers = std::max(1, workers);

    for (std::size_t di = 0; di < designs.size(); ++di) {
        const SimDesign& design = designs[di];
        design.validate();
        const SymMatrix sigma = design.sigma();
        const KnockoffModel model = design_model(design);
        const auto reps = static_cast<std::size_t>(design.replications);
        std::vector<Cell> cells(reps * n_methods * n_q);

        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t rep = next.fetch_add(1);
                if (rep >= reps) {
                    return;
                }
                RngStream data_rng(design.seed, replicate_stream(static_cast<int>(rep), "data"));
                Dataset ds;
                bool data_ok = true;
                try {
                    ds = generate_dataset(design, data_rng);
                } catch (const std::exception&) {
                    data_ok = false;
                }
                for (std::size_t mi = 0; mi < n_methods && data_ok; ++mi) {
                    for (std::size_t qi = 0; qi < n_q; ++qi) {
                        Cell& cell = cells[(rep * n_methods + mi) * n_q + qi];
                        RngStream rng(design.seed, replicate_stream(static_cast<int>(rep), methods[mi].name));
                        const MethodContext ctx{design, sigma, model, q_levels[qi]};
                        const auto t0 = std::chrono::steady_clock::now();
                        try {
                            const auto sel = methods[mi].run(ds, ctx, rng);
                            cell.outcome = summarize(sel, ds.support, design.k_nonnull);
                            cell.ok = true;
                        } catch (const std::exception&) {
                            cell.ok = false;
                        }
                        cell.seconds =
                            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                    }
                }
            }
        };
        if (workers == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w) {
                pool.emplace_back(worker);
            }
            for (auto& t : pool) {
                t.join();
            }
        }

        for (std::size_t mi = 0; mi < n_methods; ++mi) {
            for (std::size_t qi = 0; qi < n_q; ++qi) {
                ExperimentRow row;
                row.design_index = di;
                row.method = methods[mi].name;
                row.q = q_levels[qi];
                for (std::size_t rep = 0; rep < reps; ++rep) {
                    const Cell& cell = cells[(rep * n_methods + mi) * n_q + qi];
                    row.wall_seconds += cell.seconds;
                    if (!cell.ok) {
                        ++row.failures;
                        continue;
                    }
                    row.powers.push_back(cell.outcome.power);
                    row.fdps.push_back(cell.outcome.fdp);
                }
                row.replications = static_cast<int>(row.powers.size());
                std::tie(row.power, row.power_se) = mean_and_se(row.powers);
                std::tie(row.fdr, row.fdr_se) = mean_and_se(row.fdps);
                result.rows.push_back(std::move(row));
            }
        }
    }
    return result;
}

const ExperimentRow& ExperimentResult::find(std::size_t design_index, const std::string& method, double q) const
{
    for (const auto& row : rows) {
        if (row.design_index == design_index && row.method == method && std::abs(row.q - q) < 1e-12) {
            return row;
        }
    }
    throw ContractError("ExperimentResult: no row for method '" + method + "'");
}

std::string ExperimentResult::to_csv(bool include_timing) const
{
    std::ostringstream os;
    os << "design,n,p,sigma,rho,k_nonnull,amplitude,method,q,replications,failures,power,power_se,fdr,fdr_se";
    if (include_timing) {
        os << ",wall_seconds";
    }
    os << "\n";
    char buf[512];
    for (const auto& row : rows) {
        const SimDesign& d = designs[row.design_index];
        std::snprintf(buf, sizeof buf, "%zu,%ld,%ld,%s,%.4f,%ld,%.6g,%s,%.4f,%d,%d,%.6f,%.6f,%.6f,%.6f",
                      row.design_index, static_cast<long>(d.n), static_cast<long>(d.p),
                      d.sigma_kind == SigmaKind::identity ? "identity" : "ar1", d.rho,
                      static_cast<long>(d.k_nonnull), d.amplitude, row.method.c_str(), row.q, row.replications,
                      row.failures, row.power, row.power_se, row.fdr, row.fdr_se);
        os << buf;
        if (include_timing) {
            std::snprintf(buf, sizeof buf, ",%.3f", row.wall_seconds);
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

} // namespace gk
