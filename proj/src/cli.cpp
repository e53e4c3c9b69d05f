#include <gk/cli.hpp>

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include <gk/crt.hpp>
#include <gk/io.hpp>
#include <gk/meta.hpp>
#include <gk/simharness.hpp>

#ifndef GK_VERSION
#define GK_VERSION "0.0.0"
#endif

namespace gk {

using nlohmann::json;

std::string digest_hex(const std::string& text)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << hash_string(text);
    return os.str();
}

namespace {

/// Parameters of one subcommand: defaults, overridden by the config file,
/// overridden by flags. Types follow the defaults.
class Params
{
public:
    Params(CLI::App* cmd, json defaults) : values_(std::move(defaults))
    {
        cmd->add_option("--config", config_path_, "JSON config file (keys as the long flag names)");
        cmd->add_option("--out", out_path_, "output file (default stdout)");
        for (auto it = values_.begin(); it != values_.end(); ++it) {
            const std::string key = it.key();
            const std::string flag = "--" + dashed(key);
            if (it->is_boolean()) {
                cmd->add_flag(flag, flags_[key]);
            } else {
                cmd->add_option(flag, raw_[key]);
            }
        }
        cmd_ = cmd;
    }

    void resolve()
    {
        if (!config_path_.empty()) {
            json file;
            try {
                file = json::parse(read_text_file(config_path_));
            } catch (const json::exception& e) {
                throw InputError(config_path_ + ": invalid JSON (" + e.what() + ")");
            }
            if (!file.is_object()) {
                throw InputError(config_path_ + ": top level must be an object");
            }
            for (auto it = file.begin(); it != file.end(); ++it) {
                const std::string key = undashed(it.key());
                if (!values_.contains(key)) {
                    throw ConfigError(config_path_ + ": unknown key '" + it.key() + "'");
                }
                values_[key] = coerce(key, *it, config_path_);
            }
        }
        for (const auto& [key, text] : raw_) {
            if (cmd_->count("--" + dashed(key)) > 0) {
                values_[key] = coerce(key, json(text), "--" + dashed(key));
            }
        }
        for (const auto& [key, set] : flags_) {
            if (set) {
                values_[key] = true;
            }
        }
    }

    const json& values() const { return values_; }
    double num(const std::string& key) const { return values_.at(key).get<double>(); }
    long long integer(const std::string& key) const { return values_.at(key).get<long long>(); }
    std::string str(const std::string& key) const { return values_.at(key).get<std::string>(); }
    bool flag(const std::string& key) const { return values_.at(key).get<bool>(); }
    const std::string& out_path() const { return out_path_; }
    std::string digest() const { return digest_hex(values_.dump()); }

private:
    static std::string dashed(std::string key)
    {
        for (auto& c : key) {
            if (c == '_') {
                c = '-';
            }
        }
        return key;
    }

    static std::string undashed(std::string key)
    {
        for (auto& c : key) {
            if (c == '-') {
                c = '_';
            }
        }
        return key;
    }

    json coerce(const std::string& key, const json& given, const std::string& where) const
    {
        const json& def = values_.at(key);
        const std::string text = given.is_string() ? given.get<std::string>() : given.dump();
        try {
            if (def.is_boolean()) {
                if (given.is_boolean()) {
                    return given;
                }
                if (text == "true" || text == "1") {
                    return true;
                }
                if (text == "false" || text == "0") {
                    return false;
                }
                throw std::invalid_argument(text);
            }
            if (def.is_number_integer()) {
                std::size_t used = 0;
                const long long v = std::stoll(text, &used);
                if (used != text.size()) {
                    throw std::invalid_argument(text);
                }
                return v;
            }
            if (def.is_number()) {
                std::size_t used = 0;
                const double v = std::stod(text, &used);
                if (used != text.size()) {
                    throw std::invalid_argument(text);
                }
                return v;
            }
        } catch (const std::exception&) {
            throw InputError(where + ": value '" + text + "' for '" + key + "' has the wrong type");
        }
        if (given.is_array()) {
            std::string joined;
            for (const auto& item : given) {
                joined += (joined.empty() ? "" : ",") + (item.is_string() ? item.get<std::string>() : item.dump());
            }
            return joined;
        }
        return text;
    }

    CLI::App* cmd_ = nullptr;
    json values_;
    std::string config_path_;
    std::string out_path_;
    std::map<std::string, std::string> raw_;
    std::map<std::string, bool> flags_;
};

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) {
            out.push_back(item.substr(b, e - b + 1));
        }
    }
    return out;
}

std::vector<double> split_numbers(const std::string& text, const std::string& key)
{
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw InputError("'" + key + "': cannot parse '" + item + "' as a number");
        }
    }
    return out;
}

json header_block(const Params& params)
{
    return json{{"version", GK_VERSION},
                {"seed", params.values().at("seed")},
                {"config_digest", params.digest()}};
}

std::string text_header(const Params& params)
{
    std::ostringstream os;
    os << "# ghostknock " << GK_VERSION << "\n# seed=" << params.values().at("seed").dump()
       << "\n# config_digest=" << params.digest() << "\n";
    return os.str();
}

void emit(const Params& params, const std::string& content, std::ostream& out)
{
    if (params.out_path().empty()) {
        out << content;
    } else {
        write_text_file(params.out_path(), content);
    }
}

int worker_count()
{
    const char* env = std::getenv("GK_WORKERS");
    if (env == nullptr || *env == '\0') {
        return 1;
    }
    try {
        return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
        throw ConfigError("GK_WORKERS must be a positive integer");
    }
}

std::string sidecar_for(const Params& params)
{
    const std::string side = params.str("sidecar");
    return side.empty() ? params.str("summary") + ".scalars" : side;
}

std::uint64_t seed_of(const Params& params)
{
    return static_cast<std::uint64_t>(params.integer("seed"));
}

KnockoffModel model_for(const SymMatrix& sigma, const std::string& s_method, int copies, Index group_size)
{
    if (copies < 1) {
        throw ConfigError("copies must be at least 1");
    }
    if (group_size > 0) {
        return build_group_model(sigma, GroupPartition::contiguous(sigma.dim(), group_size), copies);
    }
    if (s_method == "equi") {
        return build_model(sigma, solve_s_equicorrelated(sigma, copies), copies);
    }
    if (s_method == "sdp") {
        return build_model(sigma, solve_s_sdp(sigma, copies), copies);
    }
    throw ConfigError("s_method must be 'sdp' or 'equi', got '" + s_method + "'");
}

json number_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

int cmd_select(const Params& params, std::ostream& out)
{
    const std::string method = params.str("method");
    const std::string summary_path = params.str("summary");
    const std::string sigma_path = params.str("sigma");
    if (summary_path.empty() || sigma_path.empty()) {
        throw ConfigError("select: --summary and --sigma are required");
    }
    SummaryFile summary = read_summary(summary_path, sidecar_for(params));
    SymMatrix cov = read_sym_matrix(sigma_path);
    if (cov.dim() != summary.stats.features()) {
        throw InputError(sigma_path + ": dimension " + std::to_string(cov.dim()) + " does not match " +
                         std::to_string(summary.stats.features()) + " features in " + summary_path);
    }
    const Standardized st = standardize_covariance(cov);
    summary.stats.xty = rescale_xty(summary.stats.xty, st.scale);
    const double q = params.num("q");
    const auto copies = static_cast<int>(params.integer("copies"));
    const Index group_size = params.integer("group_size");
    const KnockoffModel model = model_for(st.correlation, params.str("s_method"), copies, group_size);
    RngStream rng(seed_of(params), hash_string("select"));

    SelectionResult res;
    if (method == "gk-marginal") {
        res = gk_marginal(summary.stats, model, q, rng);
    } else if (method == "gk-lasso" || method == "gk-sqrtlasso" || method == "gk-lassomax") {
        const std::string xtx_path = params.str("xtx");
        if (xtx_path.empty()) {
            throw ConfigError("select: " + method + " needs --xtx");
        }
        const SymMatrix xtx_raw = read_sym_matrix(xtx_path);
        if (xtx_raw.dim() != summary.stats.features()) {
            throw InputError(xtx_path + ": dimension does not match the summary statistics");
        }
        const Vector inv = st.scale.cwiseInverse();
        FullSummaryStats full{SymMatrix::symmetrized(inv.asDiagonal() * xtx_raw.mat() * inv.asDiagonal()),
                              summary.stats.xty, summary.stats.yty, summary.stats.n};
        KnownCovStatistic stat = KnownCovStatistic::lassomax;
        TuningRule rule;
        if (method == "gk-lasso") {
            stat = KnownCovStatistic::fixed_lambda;
            rule = TuningRule::fixed(params.num("lambda"));
        } else if (method == "gk-sqrtlasso") {
            stat = KnownCovStatistic::sqrtlasso;
            const double kappa = params.num("kappa") > 0.0 ? params.num("kappa") : 0.3;
            rule = TuningRule::sqrt_lasso(kappa, static_cast<int>(params.integer("mc_samples")));
        }
        res = gk_known_cov(full, model, stat, rule, q, rng);
    } else if (method == "gk-pseudolasso") {
        const std::string tuning = params.str("tuning");
        TuningRule rule;
        if (tuning == "lasso-min") {
            rule = TuningRule::lasso_min(params.num("kappa") > 0.0 ? params.num("kappa") : 0.6);
        } else if (tuning == "pseudo-sum") {
            rule = TuningRule::pseudo_sum();
        } else if (tuning == "fixed") {
            rule = TuningRule::fixed(params.num("lambda"));
        } else {
            throw ConfigError("tuning must be lasso-min, pseudo-sum or fixed, got '" + tuning + "'");
        }
        if (group_size > 0) {
            const auto part = GroupPartition::contiguous(summary.stats.features(), group_size);
            res = gk_pseudolasso(summary.stats, model, rule, q, rng, &part);
        } else {
            res = gk_pseudolasso(summary.stats, model, rule, q, rng);
        }
    } else {
        throw ConfigError("unknown method '" + method + "'");
    }

    json doc;
    doc["header"] = header_block(params);
    doc["method"] = method;
    doc["q"] = q;
    doc["seed"] = params.values().at("seed");
    doc["threshold"] = number_or_null(res.threshold);
    json selected = json::array();
    json selected_ids = json::array();
    for (Index j : res.selected) {
        selected.push_back(j + 1);
        if (group_size <= 0) {
            selected_ids.push_back(summary.feature_ids[static_cast<std::size_t>(j)]);
        }
    }
    doc["selected"] = selected;
    if (group_size <= 0) {
        doc["selected_ids"] = selected_ids;
    }
    doc["unit"] = group_size > 0 ? "group" : "feature";
    doc["W"] = std::vector<double>(res.w.data(), res.w.data() + res.w.size());
    emit(params, doc.dump(2) + "\n", out);
    return 0;
}

SigmaKind sigma_kind_of(const std::string& text)
{
    if (text == "identity") {
        return SigmaKind::identity;
    }
    if (text == "ar1") {
        return SigmaKind::ar1;
    }
    throw ConfigError("sigma must be 'identity' or 'ar1', got '" + text + "'");
}

int cmd_simulate(const Params& params, std::ostream& out)
{
    std::vector<SimDesign> designs;
    const auto rhos = split_numbers(params.str("rho"), "rho");
    const auto amps = split_numbers(params.str("amplitude"), "amplitude");
    const auto qs = split_numbers(params.str("q"), "q");
    for (double amp : amps) {
        for (double rho : rhos) {
            SimDesign d;
            d.n = params.integer("n");
            d.p = params.integer("p");
            d.sigma_kind = sigma_kind_of(params.str("sigma"));
            d.rho = rho;
            d.k_nonnull = params.integer("k_nonnull");
            d.amplitude = amp;
            d.seed = seed_of(params);
            d.replications = static_cast<int>(params.integer("replications"));
            d.validate();
            designs.push_back(d);
        }
    }
    MethodOptions opt;
    opt.cv_folds = static_cast<int>(params.integer("cv_folds"));
    opt.lambda_per_n = params.num("lambda_per_n");
    std::vector<Method> methods;
    for (const auto& name : split_list(params.str("methods"))) {
        methods.push_back(make_method(name, opt));
    }
    if (methods.empty() || qs.empty() || designs.empty()) {
        throw ConfigError("simulate: need at least one method, q level and design");
    }
    const ExperimentResult res = run_experiment(designs, methods, qs, worker_count());
    emit(params, text_header(params) + res.to_csv(params.flag("timing")), out);
    return 0;
}

int cmd_crt(const Params& params, std::ostream& out)
{
    const std::string summary_path = params.str("summary");
    const std::string sigma_path = params.str("sigma");
    if (summary_path.empty() || sigma_path.empty()) {
        throw ConfigError("crt: --summary and --sigma are required");
    }
    SummaryFile summary = read_summary(summary_path, sidecar_for(params));
    const SymMatrix cov = read_sym_matrix(sigma_path);
    if (cov.dim() != summary.stats.features()) {
        throw InputError(sigma_path + ": dimension does not match the summary statistics");
    }
    const auto draws = static_cast<int>(params.integer("draws"));
    CrtOptions opt;
    opt.literal = params.flag("literal");
    const RngStream rng(seed_of(params), hash_string("crt"));
    const std::string statistic = params.str("statistic");
    Vector pvals;
    if (statistic == "marginal") {
        pvals = ghost_crt_marginal(summary.stats, cov, draws, rng, opt);
    } else if (statistic == "lasso") {
        const std::string xtx_path = params.str("xtx");
        if (xtx_path.empty()) {
            throw ConfigError("crt: the lasso statistic needs --xtx");
        }
        const SymMatrix xtx = read_sym_matrix(xtx_path);
        if (xtx.dim() != summary.stats.features()) {
            throw InputError(xtx_path + ": dimension does not match the summary statistics");
        }
        FullSummaryStats full{xtx, summary.stats.xty, summary.stats.yty, summary.stats.n};
        pvals = ghost_crt_lasso(full, cov, draws, params.num("lambda"), rng, opt);
    } else {
        throw ConfigError("statistic must be 'marginal' or 'lasso'");
    }
    const auto rejected = benjamini_hochberg(pvals, params.num("q"));
    json doc;
    doc["header"] = header_block(params);
    doc["statistic"] = statistic;
    doc["draws"] = draws;
    doc["q"] = params.num("q");
    json arr = json::array();
    for (Index j = 0; j < pvals.size(); ++j) {
        arr.push_back({{"feature", j + 1}, {"id", summary.feature_ids[static_cast<std::size_t>(j)]},
                       {"pvalue", pvals(j)}});
    }
    doc["pvalues"] = arr;
    json rej = json::array();
    for (Index j : rejected) {
        rej.push_back(j + 1);
    }
    doc["rejected"] = rej;
    emit(params, doc.dump(2) + "\n", out);
    return 0;
}

int cmd_meta(const Params& params, std::ostream& out)
{
    const auto files = split_list(params.str("studies"));
    if (files.empty()) {
        throw ConfigError("meta: --studies needs at least one file");
    }
    std::vector<StudyFile> studies;
    for (const auto& f : files) {
        studies.push_back(read_study(f));
    }
    const AlignedStudies al = align_studies(studies);
    StudyPanel panel;
    panel.z = al.z;
    panel.n = al.n;
    const std::string cor_path = params.str("cor_s");
    if (!cor_path.empty()) {
        panel.cor_s = read_sym_matrix(cor_path);
        if (panel.cor_s.dim() != panel.studies()) {
            throw InputError(cor_path + ": study correlation must be K x K");
        }
    } else {
        panel.cor_s = estimate_study_correlation(panel.z);
    }
    const Vector w = solve_meta_weights(panel.cor_s, panel.n);
    const Vector z = meta_zscore(panel, w);
    std::ostringstream os;
    os.precision(17);
    os << text_header(params) << "# weights=";
    for (Index k = 0; k < w.size(); ++k) {
        os << (k ? "," : "") << w(k);
    }
    os << "\nvariant_id\tz_meta\tpvalue_two_sided\n";
    for (Index i = 0; i < z.size(); ++i) {
        os << al.variant_ids[static_cast<std::size_t>(i)] << "\t";
        if (std::isnan(z(i))) {
            os << "NA\tNA\n";
        } else {
            os << z(i) << "\t" << two_sided_pvalue(z(i)) << "\n";
        }
    }
    emit(params, os.str(), out);
    return 0;
}

int cmd_s_solve(const Params& params, std::ostream& out)
{
    const std::string sigma_path = params.str("sigma");
    if (sigma_path.empty()) {
        throw ConfigError("s-solve: --sigma is required");
    }
    const SymMatrix cov = read_sym_matrix(sigma_path);
    const Standardized st = standardize_covariance(cov);
    const auto copies = static_cast<int>(params.integer("copies"));
    const std::string method = params.str("s_method");
    Vector s;
    if (method == "sdp") {
        s = solve_s_sdp(st.correlation, copies);
    } else if (method == "equi") {
        s = solve_s_equicorrelated(st.correlation, copies);
    } else {
        throw ConfigError("s_method must be 'sdp' or 'equi'");
    }
    json doc;
    doc["header"] = header_block(params);
    doc["s_method"] = method;
    doc["copies"] = copies;
    doc["s"] = std::vector<double>(s.data(), s.data() + s.size());
    doc["objective"] = s_objective(s);
    emit(params, doc.dump(2) + "\n", out);
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"FDR-controlled variable selection from summary statistics"};
    app.name("ghostknock");
    app.set_version_flag("--version", std::string(GK_VERSION));
    app.require_subcommand(1);

    auto* select = app.add_subcommand("select", "knockoff selection from summary statistics");
    Params select_p(select, json{{"method", "gk-pseudolasso"},
                                 {"summary", ""},
                                 {"sidecar", ""},
                                 {"sigma", ""},
                                 {"xtx", ""},
                                 {"q", 0.2},
                                 {"seed", 1},
                                 {"copies", 1},
                                 {"group_size", 0},
                                 {"s_method", "sdp"},
                                 {"tuning", "lasso-min"},
                                 {"lambda", 0.0},
                                 {"kappa", 0.0},
                                 {"mc_samples", 200}});
    auto* simulate = app.add_subcommand("simulate", "replicated power/FDR experiment, CSV output");
    Params simulate_p(simulate, json{{"n", 600},
                                     {"p", 200},
                                     {"sigma", "ar1"},
                                     {"rho", "0"},
                                     {"k_nonnull", 30},
                                     {"amplitude", "4"},
                                     {"replications", 200},
                                     {"methods", "gk-marginal"},
                                     {"q", "0.2"},
                                     {"seed", 1},
                                     {"cv_folds", 10},
                                     {"lambda_per_n", 1.0},
                                     {"timing", false}});
    auto* crt = app.add_subcommand("crt", "conditional randomization p-values and BH rejections");
    Params crt_p(crt, json{{"summary", ""},
                           {"sidecar", ""},
                           {"sigma", ""},
                           {"xtx", ""},
                           {"statistic", "marginal"},
                           {"draws", 199},
                           {"lambda", 0.0},
                           {"q", 0.2},
                           {"seed", 1},
                           {"literal", false}});
    auto* meta = app.add_subcommand("meta", "meta-analysis Z-scores across overlapping studies");
    Params meta_p(meta, json{{"studies", ""}, {"cor_s", ""}, {"seed", 0}});
    auto* s_solve = app.add_subcommand("s-solve", "s vector for a covariance matrix");
    Params s_p(s_solve, json{{"sigma", ""}, {"copies", 1}, {"s_method", "sdp"}, {"seed", 0}});

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    try {
        if (select->parsed()) {
            select_p.resolve();
            return cmd_select(select_p, out);
        }
        if (simulate->parsed()) {
            simulate_p.resolve();
            return cmd_simulate(simulate_p, out);
        }
        if (crt->parsed()) {
            crt_p.resolve();
            return cmd_crt(crt_p, out);
        }
        if (meta->parsed()) {
            meta_p.resolve();
            return cmd_meta(meta_p, out);
        }
        if (s_solve->parsed()) {
            s_p.resolve();
            return cmd_s_solve(s_p, out);
        }
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ContractError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace gk
