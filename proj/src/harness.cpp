#include "ppsel/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "ppsel/error.hpp"
#include "ppsel/io.hpp"
#include "ppsel/likelihood.hpp"

namespace ppsel {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

std::size_t parse_count(const std::string& text) {
    const double v = parse_double(text);
    if (v < 0 || v != std::floor(v) || v > 1e15) throw InputError("expected a count, got '" + text + "'");
    return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw InputError("expected true/false, got '" + text + "'");
}

Window named_window(const std::string& text) {
    if (text == "D1") return {0.0, 250.0, 0.0, 125.0};
    if (text == "D2") return {0.0, 500.0, 0.0, 250.0};
    if (text == "D3") return {0.0, 1000.0, 0.0, 500.0};
    std::stringstream ss(text);
    std::vector<double> v;
    std::string tok;
    while (ss >> tok) v.push_back(parse_double(tok));
    if (v.size() != 4) throw InputError("window must be D1, D2, D3 or four numbers, got '" + text + "'");
    return {v[0], v[1], v[2], v[3]};
}

// Covariates live on this extent before being mapped onto the study window.
const Window kCovariateExtent{0.0, 1000.0, 0.0, 500.0};

} // namespace

FieldSet synthetic_covariates(std::size_t n, const Window& window, std::uint64_t seed) {
    constexpr std::size_t cols = 50, rows = 25, bumps = 6;
    const double dx = window.width() / cols, dy = window.height() / rows;
    FieldSet out;
    for (std::size_t k = 0; k < n; ++k) {
        Rng rng({seed, k});
        std::vector<double> cx(bumps), cy(bumps), sd(bumps), amp(bumps);
        for (std::size_t b = 0; b < bumps; ++b) {
            cx[b] = rng.uniform(window.x_min(), window.x_max());
            cy[b] = rng.uniform(window.y_min(), window.y_max());
            sd[b] = rng.uniform(0.08, 0.25) * window.width();
            amp[b] = rng.normal();
        }
        std::vector<double> v(rows * cols);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                const double x = window.x_min() + (static_cast<double>(c) + 0.5) * dx;
                const double y = window.y_min() + (static_cast<double>(r) + 0.5) * dy;
                double s = 0.0;
                for (std::size_t b = 0; b < bumps; ++b) {
                    const double d2 = (x - cx[b]) * (x - cx[b]) + (y - cy[b]) * (y - cy[b]);
                    s += amp[b] * std::exp(-d2 / (2.0 * sd[b] * sd[b]));
                }
                v[r * cols + c] = s;
            }
        }
        const Eigen::Map<Eigen::VectorXd> m(v.data(), static_cast<Eigen::Index>(v.size()));
        const double mean = m.mean();
        const double sdev = std::sqrt((m.array() - mean).square().mean());
        for (double& x : v) x = (x - mean) / sdev;
        const std::string name = (k + 1 < 10 ? "cov0" : "cov") + std::to_string(k + 1);
        out.emplace_back(name, rows, cols, window.x_min(), window.y_min(), dx, dy, std::move(v));
    }
    return out;
}

CovariateField rescale_field(const CovariateField& f, const Window& w) {
    return CovariateField(f.name(), f.n_rows(), f.n_cols(), w.x_min(), w.y_min(),
                          w.width() / static_cast<double>(f.n_cols()),
                          w.height() / static_cast<double>(f.n_rows()), f.values());
}

ModelSpec nested_model(const FieldSet& fields, std::size_t p, bool standardize) {
    ModelSpec spec;
    spec.include_intercept = true;
    spec.standardize = standardize;
    const std::size_t n = fields.size();
    if (p < 1) throw InputError("model needs at least the intercept");
    for (std::size_t k = 0; k < n && spec.dimension() < p; ++k) spec.covariates.push_back(fields[k].name());
    for (std::size_t a = 0; a < n && spec.dimension() < p; ++a)
        for (std::size_t b = a + 1; b < n && spec.dimension() < p; ++b)
            spec.interactions.emplace_back(fields[a].name(), fields[b].name());
    if (spec.dimension() < p)
        throw InputError("cannot build " + std::to_string(p) + " columns from " + std::to_string(n) +
                         " covariates and their pairwise interactions");
    return spec;
}

std::pair<double, double> tpr_fpr(const std::vector<std::size_t>& selected,
                                  const std::vector<std::size_t>& truth, std::size_t p,
                                  std::optional<std::size_t> intercept_index) {
    auto skip = [&](std::size_t j) { return intercept_index && j == *intercept_index; };
    std::vector<bool> is_true(p, false), is_sel(p, false);
    std::size_t n_true = 0;
    for (std::size_t j : truth) {
        if (j >= p) throw InputError("truth index out of range");
        if (skip(j) || is_true[j]) continue;
        is_true[j] = true;
        ++n_true;
    }
    if (n_true == 0) throw InputError("true support is empty");
    for (std::size_t j : selected) {
        if (j >= p) throw InputError("selected index out of range");
        if (!skip(j)) is_sel[j] = true;
    }
    std::size_t tp = 0, fp = 0;
    for (std::size_t j = 0; j < p; ++j) {
        if (!is_sel[j]) continue;
        if (is_true[j]) ++tp;
        else ++fp;
    }
    const std::size_t n_null = p - (intercept_index ? 1 : 0) - n_true;
    const double tpr = 100.0 * static_cast<double>(tp) / static_cast<double>(n_true);
    const double fpr = n_null == 0 ? 0.0 : 100.0 * static_cast<double>(fp) / static_cast<double>(n_null);
    return {tpr, fpr};
}

double rmse(const std::vector<Eigen::VectorXd>& estimates, const Eigen::VectorXd& truth,
            std::optional<std::size_t> intercept_index) {
    if (estimates.empty()) throw InputError("rmse needs at least one estimate");
    Eigen::VectorXd mse = Eigen::VectorXd::Zero(truth.size());
    for (const auto& b : estimates) {
        if (b.size() != truth.size()) throw InputError("estimate length does not match the truth");
        mse += (b - truth).array().square().matrix();
    }
    mse /= static_cast<double>(estimates.size());
    if (intercept_index) mse[static_cast<Eigen::Index>(*intercept_index)] = 0.0;
    return std::sqrt(mse.sum());
}

void StudyConfig::validate() const {
    if (!(mu > 0)) throw InputError("mu must be positive");
    if (p < 2) throw InputError("p must be at least 2");
    const std::size_t n = rasters.empty() ? n_covariates : rasters.size();
    if (p > 1 + n + n * (n - 1) / 2)
        throw InputError("p = " + std::to_string(p) + " exceeds the columns available from " + std::to_string(n) +
                         " covariates");
    if (truth.empty()) throw InputError("true support is empty");
    for (const auto& [j, v] : truth) {
        if (j == 0 || j >= p) throw InputError("truth index " + std::to_string(j) + " is out of range");
        if (v == 0.0) throw InputError("truth values must be non-zero");
    }
    if (n_replicates == 0) throw InputError("n_replicates must be positive");
    if (methods.empty()) throw InputError("no methods selected");
    if (process == Process::Thomas) thomas.validate();
    if (nu < 0) throw InputError("nu must be non-negative");
}

StudyConfig parse_study_config(std::istream& in, const std::string& source) {
    StudyConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(lineno) + ": ";
        if (eq == std::string::npos) throw InputError(where + "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "process") {
                if (val == "poisson") cfg.process = Process::Poisson;
                else if (val == "thomas") cfg.process = Process::Thomas;
                else throw InputError("unknown process '" + val + "'");
            } else if (key == "kappa") {
                cfg.thomas.kappa = parse_double(val);
            } else if (key == "gamma") {
                cfg.thomas.gamma_disp = parse_double(val);
            } else if (key == "window") {
                cfg.window = named_window(val);
            } else if (key == "mu") {
                cfg.mu = parse_double(val);
            } else if (key == "p") {
                cfg.p = parse_count(val);
            } else if (key == "truth") {
                cfg.truth.clear();
                for (const auto& item : split(val, ',')) {
                    const auto colon = item.find(':');
                    if (colon == std::string::npos) throw InputError("truth entries look like index:value");
                    cfg.truth[parse_count(item.substr(0, colon))] = parse_double(item.substr(colon + 1));
                }
            } else if (key == "replicates") {
                cfg.n_replicates = parse_count(val);
            } else if (key == "methods") {
                cfg.methods.clear();
                if (val == "both") cfg.methods = {Method::AL, Method::ALDS};
                else
                    for (const auto& m : split(val, ',')) cfg.methods.push_back(parse_method(m));
                for (Method m : cfg.methods)
                    if (m == Method::MLE) throw InputError("study methods are al and alds");
            } else if (key == "nu") {
                cfg.nu = parse_double(val);
            } else if (key == "grid") {
                cfg.grid = GridSpec::parse(val);
            } else if (key == "quad") {
                cfg.quad = parse_quad(val);
            } else if (key == "seed") {
                cfg.seed = parse_count(val);
            } else if (key == "covariate_seed") {
                cfg.covariate_seed = parse_count(val);
            } else if (key == "covariates") {
                cfg.n_covariates = parse_count(val);
            } else if (key == "rasters") {
                cfg.rasters.clear();
                for (const auto& r : split(val, ',')) cfg.rasters.emplace_back(r);
            } else if (key == "standardize") {
                cfg.standardize = parse_bool(val);
            } else if (key == "label") {
                cfg.label = val;
            } else {
                throw InputError("unknown key '" + key + "'");
            }
        } catch (const InputError& e) {
            throw InputError(where + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

StudyConfig read_study_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    StudyConfig cfg = parse_study_config(in, path.string());
    for (auto& r : cfg.rasters)
        if (r.is_relative()) r = path.parent_path() / r;
    return cfg;
}

Eigen::VectorXd truth_vector(const StudyConfig& config) {
    Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config.p));
    for (const auto& [j, v] : config.truth) t[static_cast<Eigen::Index>(j)] = v;
    return t;
}

std::vector<MethodSummary> summarize(const std::vector<ReplicateRecord>& records,
                                     const std::vector<Method>& methods,
                                     const Eigen::VectorXd& truth, std::size_t p) {
    std::vector<std::size_t> true_idx;
    for (Eigen::Index j = 1; j < truth.size(); ++j)
        if (truth[j] != 0.0) true_idx.push_back(static_cast<std::size_t>(j));
    std::vector<MethodSummary> out;
    for (Method m : methods) {
        MethodSummary s;
        s.method = m;
        std::vector<Eigen::VectorXd> est;
        for (const auto& r : records) {
            if (r.method != m) continue;
            if (!r.ok) {
                ++s.n_failed;
                continue;
            }
            ++s.n_ok;
            const auto [tpr, fpr] = tpr_fpr(r.support, true_idx, p);
            s.tpr += tpr;
            s.fpr += fpr;
            s.mean_seconds += r.seconds;
            est.push_back(r.beta);
        }
        if (s.n_ok == 0) {
            s.tpr = s.fpr = s.rmse = s.mean_seconds = std::numeric_limits<double>::quiet_NaN();
        } else {
            const double n = static_cast<double>(s.n_ok);
            s.tpr /= n;
            s.fpr /= n;
            s.mean_seconds /= n;
            s.rmse = rmse(est, truth);
        }
        out.push_back(s);
    }
    return out;
}

StudyResult run_study(const StudyConfig& config, std::size_t threads) {
    config.validate();
    FieldSet fields;
    if (config.rasters.empty()) {
        for (const auto& f : synthetic_covariates(config.n_covariates, kCovariateExtent, config.covariate_seed))
            fields.push_back(rescale_field(f, config.window));
    } else {
        for (const auto& path : config.rasters) fields.push_back(rescale_field(read_raster(path), config.window));
    }
    const ModelSpec sim_spec = nested_model(fields, config.p, false);
    ModelSpec fit_spec = sim_spec;
    fit_spec.standardize = config.standardize;
    const Eigen::VectorXd truth = tune_intercept(config.window, sim_spec, fields, truth_vector(config), config.mu);

    const std::size_t n_rep = config.n_replicates;
    const std::size_t n_m = config.methods.size();
    std::vector<ReplicateRecord> records(n_rep * n_m);

    auto run_one = [&](std::size_t r) {
        using clock = std::chrono::steady_clock;
        for (std::size_t k = 0; k < n_m; ++k) {
            records[r * n_m + k].replicate = r;
            records[r * n_m + k].method = config.methods[k];
        }
        try {
            const RngSpec rng{config.seed, r};
            const PointPattern pattern =
                config.process == Process::Poisson
                    ? sim_poisson(config.window, sim_spec, fields, truth, rng)
                    : sim_thomas(config.window, sim_spec, fields, truth, config.thomas, rng);
            for (std::size_t k = 0; k < n_m; ++k) records[r * n_m + k].n_points = pattern.size();
            const auto t0 = clock::now();
            const QuadratureScheme scheme = build_scheme(
                pattern, fit_spec, fields, config.quad ? *config.quad : default_grid(pattern.size()));
            const Eigen::VectorXd beta_tilde = mle(scheme).coef.beta;
            const double shared = std::chrono::duration<double>(clock::now() - t0).count();
            for (std::size_t k = 0; k < n_m; ++k) {
                ReplicateRecord& rec = records[r * n_m + k];
                try {
                    const auto t1 = clock::now();
                    const LambdaPath path =
                        select_lambda(scheme, config.methods[k], config.nu, beta_tilde, config.grid);
                    rec.seconds = shared + std::chrono::duration<double>(clock::now() - t1).count();
                    const FitResult& best = path.best();
                    rec.lambda = best.lambda;
                    rec.support = best.support;
                    rec.beta = to_original_scale(best.coef.beta, best.stats, scheme.has_intercept);
                    rec.ok = true;
                } catch (const std::exception& e) {
                    rec.error = e.what();
                }
            }
        } catch (const std::exception& e) {
            for (std::size_t k = 0; k < n_m; ++k) records[r * n_m + k].error = e.what();
        }
    };

    if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    threads = std::min(threads, n_rep);
    if (threads <= 1) {
        for (std::size_t r = 0; r < n_rep; ++r) run_one(r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < n_rep; r = next++) run_one(r);
            });
        for (auto& th : pool) th.join();
    }

    StudyResult res;
    res.label = config.label;
    res.records = std::move(records);
    res.summaries = summarize(res.records, config.methods, truth, config.p);
    for (const auto& s : res.summaries) {
        if (10 * s.n_failed > n_rep) {
            std::string first;
            for (const auto& r : res.records)
                if (r.method == s.method && !r.ok) {
                    first = r.error;
                    break;
                }
            throw ConvergenceError("study '" + config.label + "': " + std::to_string(s.n_failed) + " of " +
                                       std::to_string(n_rep) + " " + to_string(s.method) +
                                       " replicates failed; first error: " + first,
                                   Eigen::VectorXd());
        }
    }
    return res;
}

void write_study_csv(const StudyResult& result, std::ostream& out, bool timing) {
    CsvTable t;
    t.header = {"config"};
    std::vector<std::string> row{result.label};
    for (const auto& s : result.summaries) {
        const std::string m = to_string(s.method);
        t.header.insert(t.header.end(), {m + "_TPR", m + "_FPR", m + "_RMSE"});
        row.insert(row.end(), {format_double(s.tpr), format_double(s.fpr), format_double(s.rmse)});
        if (timing) {
            t.header.push_back(m + "_Time");
            row.push_back(format_double(s.mean_seconds));
        }
        t.header.push_back(m + "_failed");
        row.push_back(std::to_string(s.n_failed));
    }
    t.rows.push_back(std::move(row));
    write_csv(t, out);
}

void write_records_csv(const StudyResult& result, const std::vector<std::string>& names,
                       std::ostream& out, bool timing) {
    CsvTable t;
    t.header = {"replicate", "method", "n_points", "ok", "lambda", "support"};
    if (timing) t.header.push_back("seconds");
    t.header.insert(t.header.end(), names.begin(), names.end());
    t.header.push_back("error");
    for (const auto& r : result.records) {
        std::string supp;
        for (std::size_t j : r.support) supp += (supp.empty() ? "" : ";") + std::to_string(j);
        std::vector<std::string> row{std::to_string(r.replicate), to_string(r.method),
                                     std::to_string(r.n_points), r.ok ? "1" : "0",
                                     format_double(r.lambda), supp};
        if (timing) row.push_back(format_double(r.seconds));
        for (std::size_t j = 0; j < names.size(); ++j)
            row.push_back(r.ok ? format_double(r.beta[static_cast<Eigen::Index>(j)]) : "NA");
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        row.push_back(err);
        t.rows.push_back(std::move(row));
    }
    write_csv(t, out);
}

} // namespace ppsel
