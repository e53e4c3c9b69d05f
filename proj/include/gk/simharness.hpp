#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <gk/pipelines.hpp>

namespace gk {

enum class SigmaKind { identity, ar1 };

struct SimDesign
{
    Index n = 600;
    Index p = 200;
    SigmaKind sigma_kind = SigmaKind::identity;
    double rho = 0.0;
    Index k_nonnull = 30;
    double amplitude = 4.0;
    std::uint64_t seed = 1;
    int replications = 200;

    void validate() const;
    SymMatrix sigma() const;
    std::string label() const;
};

struct Dataset
{
    Matrix x;
    Vector y;
    Vector beta;
    std::vector<Index> support;  // ascending
};

/// Rows of X are N(0, Sigma); Y = X beta + sqrt(n) eps.
Dataset generate_dataset(const SimDesign& design, RngStream& rng);

struct Outcome
{
    double power = 0.0;
    double fdp = 0.0;
};

Outcome summarize(const std::vector<Index>& selected, const std::vector<Index>& support, Index k_nonnull);

struct MethodContext
{
    const SimDesign& design;
    const SymMatrix& sigma;
    const KnockoffModel& model;
    double q;
};

using MethodFn = std::function<std::vector<Index>(const Dataset&, const MethodContext&, RngStream&)>;

struct Method
{
    std::string name;
    MethodFn run;
};

struct MethodOptions
{
    /// gk-lasso / kf-lasso penalty is lambda_per_n * n on the raw Gram scale.
    double lambda_per_n = 1.0;
    int cv_folds = 10;
    int sqrt_mc_samples = 200;
    double sqrt_kappa = 0.3;
    double lasso_min_kappa = 0.6;
};

/// gk-marginal, gk-lasso, gk-sqrtlasso, gk-lassomax, gk-pseudolasso-lassomin,
/// gk-pseudolasso-pseudosum, kf-lasso, kf-lassocv.
std::vector<std::string> method_names();
Method make_method(const std::string& name, const MethodOptions& options = {});

/// Stream id for (replicate, tag): splitmix64(splitmix64(rep) ^ fnv1a(tag)).
/// Data draws use the tag "data"; each method uses its own name.
std::uint64_t replicate_stream(int replicate, std::string_view tag);

struct ExperimentRow
{
    std::size_t design_index = 0;
    std::string method;
    double q = 0.2;
    int replications = 0;
    int failures = 0;
    double power = 0.0;
    double power_se = 0.0;
    double fdr = 0.0;
    double fdr_se = 0.0;
    double wall_seconds = 0.0;
    std::vector<double> powers;  // per successful replicate, in replicate order
    std::vector<double> fdps;
};

struct ExperimentResult
{
    std::vector<SimDesign> designs;
    std::vector<ExperimentRow> rows;

    const ExperimentRow& find(std::size_t design_index, const std::string& method, double q) const;
    /// Timing is off by default so the CSV is reproducible byte for byte.
    std::string to_csv(bool include_timing = false) const;
};

/// Knockoff model used for a design: s = 1 for identity, SDP otherwise.
KnockoffModel design_model(const SimDesign& design);

ExperimentResult run_experiment(const std::vector<SimDesign>& designs, const std::vector<Method>& methods,
                                const std::vector<double>& q_levels, int workers = 1);

/// Mean and standard error (sample SD / sqrt(R)).
std::pair<double, double> mean_and_se(const std::vector<double>& values);

} // namespace gk
