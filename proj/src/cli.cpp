#include "ppsel/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ppsel/al_solver.hpp"
#include "ppsel/alds_solver.hpp"
#include "ppsel/error.hpp"
#include "ppsel/harness.hpp"
#include "ppsel/io.hpp"
#include "ppsel/likelihood.hpp"
#include "ppsel/quadrature.hpp"
#include "ppsel/simulate.hpp"
#include "ppsel/tuning.hpp"

namespace ppsel {

namespace {

using nlohmann::json;

struct ModelOptions {
    std::vector<std::string> rasters;
    std::size_t synthetic = 0;
    std::uint64_t covariate_seed = 2024;
    std::vector<std::string> covariates;
    std::vector<std::string> interactions;
    std::size_t p = 0;
    bool no_intercept = false;
    bool standardize = false;

    void add_to(CLI::App* app) {
        app->add_option("--raster", rasters, "covariate raster file (repeatable)");
        app->add_option("--synthetic", synthetic, "use N bundled synthetic covariates instead of rasters");
        app->add_option("--covariate-seed", covariate_seed, "seed of the synthetic covariates");
        app->add_option("--covariate", covariates, "covariate name to include (default: all)");
        app->add_option("--interaction", interactions, "interaction term a:b (repeatable)");
        app->add_option("--p", p, "nested model with p columns: intercept, covariates, then interactions");
        app->add_flag("--no-intercept", no_intercept, "drop the intercept column");
        app->add_flag("--standardize", standardize, "standardize design columns before fitting");
    }

    FieldSet fields(const Window& window) const {
        if (!rasters.empty() && synthetic > 0) throw InputError("use either --raster or --synthetic");
        FieldSet out;
        if (synthetic > 0) {
            for (const auto& f : synthetic_covariates(synthetic, Window(0.0, 1000.0, 0.0, 500.0), covariate_seed))
                out.push_back(rescale_field(f, window));
        }
        for (const auto& r : rasters) out.push_back(read_raster(r));
        return out;
    }

    ModelSpec spec(const FieldSet& fields) const {
        ModelSpec s;
        if (p > 0) {
            if (no_intercept || !covariates.empty() || !interactions.empty())
                throw InputError("--p cannot be combined with --covariate, --interaction or --no-intercept");
            s = nested_model(fields, p, standardize);
            return s;
        }
        s.include_intercept = !no_intercept;
        s.standardize = standardize;
        if (covariates.empty())
            for (const auto& f : fields) s.covariates.push_back(f.name());
        else
            s.covariates = covariates;
        for (const auto& term : interactions) {
            const auto colon = term.find(':');
            if (colon == std::string::npos) throw InputError("interaction must look like a:b, got '" + term + "'");
            s.interactions.emplace_back(term.substr(0, colon), term.substr(colon + 1));
        }
        return s;
    }
};

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
    return out;
}

Window parse_window(const std::string& text) {
    if (text == "D1") return {0.0, 250.0, 0.0, 125.0};
    if (text == "D2") return {0.0, 500.0, 0.0, 250.0};
    if (text == "D3") return {0.0, 1000.0, 0.0, 500.0};
    std::vector<double> v;
    std::string t = text;
    for (char& c : t)
        if (c == ',') c = ' ';
    std::stringstream ss(t);
    std::string tok;
    while (ss >> tok) v.push_back(parse_double(tok));
    if (v.size() != 4) throw InputError("window must be D1, D2, D3 or 'x_min x_max y_min y_max'");
    return {v[0], v[1], v[2], v[3]};
}

// Writes to the named file, or to fallback when the name is empty.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw InputError("cannot write " + path);
            stream_ = file_.get();
        }
    }
    std::ostream& get() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

json fit_json(const FitResult& fit, const QuadratureScheme& scheme) {
    const Eigen::VectorXd orig = to_original_scale(fit.coef.beta, fit.stats, scheme.has_intercept);
    json coefs = json::array();
    for (Eigen::Index j = 0; j < fit.coef.beta.size(); ++j)
        coefs.push_back({{"name", fit.coef.names[static_cast<std::size_t>(j)]},
                         {"estimate", fit.coef.beta[j]},
                         {"original_scale", orig[j]}});
    json j;
    j["method"] = to_string(fit.method);
    j["lambda"] = fit.lambda;
    j["coefficients"] = coefs;
    j["support"] = fit.support;
    j["objective"] = fit.objective;
    j["loglik"] = loglik(scheme, fit.coef.beta);
    j["bic"] = bic(fit, scheme);
    j["kkt_residual"] = fit.kkt_residual;
    j["outer_iterations"] = fit.outer_iterations;
    j["inner_iterations"] = fit.inner_iterations;
    j["clamped"] = fit.clamped;
    j["n_data"] = scheme.n_data;
    j["n_quadrature"] = scheme.size();
    j["standardized"] = !fit.stats.empty();
    return j;
}

void fit_csv(const FitResult& fit, const QuadratureScheme& scheme, std::ostream& out) {
    const Eigen::VectorXd orig = to_original_scale(fit.coef.beta, fit.stats, scheme.has_intercept);
    CsvTable t;
    t.header = {"name", "estimate", "original_scale"};
    for (Eigen::Index j = 0; j < fit.coef.beta.size(); ++j)
        t.rows.push_back({fit.coef.names[static_cast<std::size_t>(j)], format_double(fit.coef.beta[j]),
                          format_double(orig[j])});
    write_csv(t, out);
}

struct FitArgs {
    ModelOptions model;
    std::string pattern;
    std::string method = "al";
    std::optional<double> lambda;
    double nu = 1.0;
    std::string grid;
    std::string quad;
    std::string dump_lp;
    std::string scheme_out;
    std::string format = "json";
    std::string out;
};

QuadratureScheme load_scheme(const FitArgs& a, const std::string& scheme_out) {
    const PointPattern pattern = read_pattern(a.pattern);
    const FieldSet fields = a.model.fields(pattern.window());
    const ModelSpec spec = a.model.spec(fields);
    const GridSize grid = a.quad.empty() ? default_grid(pattern.size()) : parse_quad(a.quad);
    QuadratureScheme scheme = build_scheme(pattern, spec, fields, grid);
    if (!scheme_out.empty()) write_scheme_csv(scheme, scheme_out);
    return scheme;
}

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
    const Method method = parse_method(a.method);
    const QuadratureScheme scheme = load_scheme(a, a.scheme_out);
    FitResult fit;
    if (method == Method::MLE) {
        fit = mle(scheme);
    } else {
        const Eigen::VectorXd beta_tilde = mle(scheme).coef.beta;
        if (a.lambda) {
            const PenaltyWeights w = adaptive_weights(beta_tilde, a.nu, *a.lambda, scheme.has_intercept);
            if (method == Method::AL) {
                fit = fit_al(scheme, w, beta_tilde);
            } else {
                const AldsLinearization lin = linearize(scheme, beta_tilde);
                if (!a.dump_lp.empty()) {
                    std::vector<Eigen::Index> kept;
                    const AldsProblem prob =
                        restrict_problem(lin, w, static_cast<double>(scheme.n_data), kept);
                    Sink lp_out(a.dump_lp, err);
                    write_lp(build_alds_lp(prob), lp_out.get());
                }
                fit = fit_alds(scheme, w, lin);
            }
            fit.lambda = *a.lambda;
        } else {
            const GridSpec grid = a.grid.empty() ? GridSpec{} : GridSpec::parse(a.grid);
            const LambdaPath path = select_lambda(scheme, method, a.nu, beta_tilde, grid);
            if (path.n_failed() > 0)
                err << "warning: " << path.n_failed() << " of " << path.grid.size()
                    << " lambda values failed\n";
            fit = path.best();
        }
    }
    Sink sink(a.out, out);
    if (a.format == "json") sink.get() << fit_json(fit, scheme).dump(2) << '\n';
    else if (a.format == "csv") fit_csv(fit, scheme, sink.get());
    else throw InputError("unknown format '" + a.format + "' (json or csv)");
    return 0;
}

int cmd_path(const FitArgs& a, std::ostream& out, std::ostream& err) {
    const Method method = parse_method(a.method);
    if (method == Method::MLE) throw InputError("path needs --method al or alds");
    const QuadratureScheme scheme = load_scheme(a, a.scheme_out);
    const GridSpec grid = a.grid.empty() ? GridSpec{} : GridSpec::parse(a.grid);
    const LambdaPath path = select_lambda(scheme, method, a.nu, grid);
    Sink sink(a.out, out);
    write_path_csv(path, scheme.column_names, sink.get());
    err << "selected lambda " << format_double(path.grid[path.selected]) << " (bic "
        << format_double(path.bic[path.selected]) << ")\n";
    return 0;
}

struct SimArgs {
    ModelOptions model;
    std::string process = "poisson";
    double kappa = 4e-4;
    double gamma = 15.0;
    std::string window = "D3";
    std::string beta;
    std::optional<double> mu;
    std::uint64_t seed = 1;
    std::uint64_t replicate = 0;
    std::string out;
};

int cmd_simulate(const SimArgs& a, std::ostream& out) {
    const Window window = parse_window(a.window);
    const FieldSet fields = a.model.fields(window);
    ModelSpec spec = a.model.spec(fields);
    spec.standardize = false;
    const auto p = static_cast<Eigen::Index>(spec.dimension());
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    if (!a.beta.empty()) {
        const auto v = parse_list(a.beta);
        if (static_cast<Eigen::Index>(v.size()) != p)
            throw InputError("--beta has " + std::to_string(v.size()) + " values, the model has " +
                             std::to_string(p) + " columns");
        for (Eigen::Index j = 0; j < p; ++j) beta[j] = v[static_cast<std::size_t>(j)];
    } else if (spec.include_intercept && p >= 3) {
        beta[1] = 1.0;
        beta[2] = -1.0;
    }
    if (a.mu) beta = tune_intercept(window, spec, fields, beta, *a.mu);

    const RngSpec rng{a.seed, a.replicate};
    std::vector<std::pair<std::string, std::string>> meta{
        {"process", a.process}, {"seed", std::to_string(a.seed)},
        {"replicate", std::to_string(a.replicate)}, {"rng", RngSpec::algorithm}};
    std::string b;
    for (Eigen::Index j = 0; j < p; ++j) b += (j ? "," : "") + format_double(beta[j]);
    meta.emplace_back("beta", b);
    PointPattern pattern = [&] {
        if (a.process == "poisson") return sim_poisson(window, spec, fields, beta, rng);
        if (a.process == "thomas") {
            meta.emplace_back("kappa", format_double(a.kappa));
            meta.emplace_back("gamma", format_double(a.gamma));
            return sim_thomas(window, spec, fields, beta, {a.kappa, a.gamma}, rng);
        }
        throw InputError("unknown process '" + a.process + "' (poisson or thomas)");
    }();
    Sink sink(a.out, out);
    write_pattern(pattern, sink.get(), meta);
    return 0;
}

struct BenchArgs {
    std::string config;
    std::size_t threads = 0;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicates;
    bool timing = false;
    std::string out;
    std::string records;
};

int cmd_benchmark(const BenchArgs& a, std::ostream& out) {
    StudyConfig cfg = read_study_config(a.config);
    if (a.seed) cfg.seed = *a.seed;
    if (a.replicates) cfg.n_replicates = *a.replicates;
    const StudyResult res = run_study(cfg, a.threads);
    Sink sink(a.out, out);
    write_study_csv(res, sink.get(), a.timing);
    if (!a.records.empty()) {
        std::vector<std::string> names{"(Intercept)"};
        FieldSet f = synthetic_covariates(cfg.n_covariates, Window(0.0, 1000.0, 0.0, 500.0), cfg.covariate_seed);
        if (!cfg.rasters.empty()) {
            f.clear();
            for (const auto& r : cfg.rasters) f.push_back(read_raster(r));
        }
        Sink rec(a.records, out);
        write_records_csv(res, nested_model(f, cfg.p, false).column_names(), rec.get(), a.timing);
    }
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sparse log-linear intensity estimation for spatial point patterns"};
    app.require_subcommand(1);

    FitArgs fa;
    auto add_fit_opts = [&](CLI::App* sub, bool with_lambda) {
        fa.model.add_to(sub);
        sub->add_option("--pattern", fa.pattern, "point pattern CSV")->required();
        sub->add_option("--method", fa.method, with_lambda ? "mle, al or alds" : "al or alds");
        sub->add_option("--nu", fa.nu, "adaptive weight exponent");
        sub->add_option("--grid", fa.grid, "lambda grid: N, N:ratio or l1,l2,...");
        sub->add_option("--quad", fa.quad, "dummy grid NXxNY (default from the point count)");
        sub->add_option("--scheme-out", fa.scheme_out, "write the quadrature scheme CSV");
        sub->add_option("--out", fa.out, "output file (default stdout)");
        sub->add_option("--seed", "ignored; accepted for uniform scripting");
        if (with_lambda) {
            sub->add_option("--lambda", fa.lambda, "scalar lambda (default: BIC over the grid)");
            sub->add_option("--dump-lp", fa.dump_lp, "write the ALDS linear program (needs --lambda)");
            sub->add_option("--format", fa.format, "json or csv");
        }
    };
    CLI::App* fit = app.add_subcommand("fit", "fit one point pattern");
    add_fit_opts(fit, true);
    CLI::App* path = app.add_subcommand("path", "lambda path with BIC as CSV");
    add_fit_opts(path, false);

    SimArgs sa;
    CLI::App* sim = app.add_subcommand("simulate", "simulate a point pattern");
    sa.model.add_to(sim);
    sim->add_option("--process", sa.process, "poisson or thomas");
    sim->add_option("--kappa", sa.kappa, "Thomas parent intensity");
    sim->add_option("--gamma", sa.gamma, "Thomas dispersal standard deviation");
    sim->add_option("--window", sa.window, "D1, D2, D3 or 'x_min x_max y_min y_max'");
    sim->add_option("--beta", sa.beta, "comma separated coefficients (default: 0, 1, -1, 0, ...)");
    sim->add_option("--mu", sa.mu, "tune the intercept to this expected count");
    sim->add_option("--seed", sa.seed, "RNG seed");
    sim->add_option("--replicate", sa.replicate, "replicate index (RNG stream)");
    sim->add_option("--out", sa.out, "output file (default stdout)");

    BenchArgs ba;
    CLI::App* bench = app.add_subcommand("benchmark", "Monte Carlo study from a key=value config");
    bench->add_option("--config", ba.config, "study config file")->required();
    bench->add_option("--threads", ba.threads, "worker threads (0 = all cores)");
    bench->add_option("--seed", ba.seed, "override the config seed");
    bench->add_option("--replicates", ba.replicates, "override the replicate count");
    bench->add_flag("--timing", ba.timing, "add mean wall time columns");
    bench->add_option("--out", ba.out, "summary CSV (default stdout)");
    bench->add_option("--records", ba.records, "per-replicate CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*fit) return cmd_fit(fa, out, err);
        if (*path) return cmd_path(fa, out, err);
        if (*sim) return cmd_simulate(sa, out);
        if (*bench) return cmd_benchmark(ba, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"ppsel"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace ppsel
