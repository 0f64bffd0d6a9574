#include "ppsel/tuning.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "ppsel/error.hpp"
#include "ppsel/io.hpp"
#include "ppsel/likelihood.hpp"

namespace ppsel {

PenaltyWeights adaptive_weights(const Eigen::VectorXd& beta_tilde, double nu, double lambda,
                                bool has_intercept) {
    if (std::isnan(nu) || nu < 0) throw InputError("nu must be non-negative");
    if (std::isnan(lambda) || lambda < 0) throw InputError("lambda must be non-negative");
    PenaltyWeights w;
    w.lambda = Eigen::VectorXd::Zero(beta_tilde.size());
    if (lambda == 0.0) return w;
    for (Eigen::Index j = 0; j < beta_tilde.size(); ++j) {
        if (has_intercept && j == 0) continue;
        const double b = std::abs(beta_tilde[j]);
        w.lambda[j] = b == 0.0 ? std::numeric_limits<double>::infinity() : lambda * std::pow(b, -nu);
    }
    return w;
}

double bic(const FitResult& fit, const QuadratureScheme& scheme) {
    if (scheme.n_data == 0) throw InputError("BIC needs at least one data point");
    const double m = static_cast<double>(scheme.n_data);
    return -2.0 * loglik(scheme, fit.coef.beta) + static_cast<double>(fit.support.size()) * std::log(m);
}

double lambda_max(const QuadratureScheme& scheme, const Eigen::VectorXd& beta_tilde, double nu) {
    const Eigen::Index p = scheme.design.cols();
    if (beta_tilde.size() != p) throw InputError("pilot estimate has the wrong length");
    if (scheme.n_data == 0) throw InputError("lambda_max needs at least one data point");
    const double m = static_cast<double>(scheme.n_data);

    Eigen::VectorXd null = Eigen::VectorXd::Zero(p);
    if (scheme.has_intercept) {
        std::vector<bool> free(static_cast<std::size_t>(p), false);
        free[0] = true;
        null[0] = std::log(m / scheme.weights.sum());
        null = mle(scheme, null, {}, free).coef.beta;
    }
    const Eigen::VectorXd u = score(scheme, null);
    double lmax = 0.0;
    for (Eigen::Index j = scheme.has_intercept ? 1 : 0; j < p; ++j) {
        const double b = std::abs(beta_tilde[j]);
        if (b == 0.0) continue;
        lmax = std::max(lmax, std::abs(u[j]) * std::pow(b, nu) / m);
    }
    return lmax;
}

GridSpec GridSpec::parse(const std::string& text) {
    GridSpec g;
    if (text.find(',') != std::string::npos) {
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) g.values.push_back(parse_double(item));
        for (std::size_t i = 1; i < g.values.size(); ++i)
            if (!(g.values[i] < g.values[i - 1]))
                throw InputError("lambda grid must be strictly decreasing: " + text);
        return g;
    }
    const auto colon = text.find(':');
    const double n = parse_double(text.substr(0, colon));
    if (!(n >= 1) || n != std::floor(n)) throw InputError("grid size must be a positive integer: " + text);
    g.n = static_cast<std::size_t>(n);
    if (colon != std::string::npos) {
        g.ratio = parse_double(text.substr(colon + 1));
        if (!(g.ratio > 0 && g.ratio < 1)) throw InputError("grid ratio must lie in (0, 1): " + text);
    }
    return g;
}

std::vector<double> make_grid(const GridSpec& spec, double lmax) {
    if (!spec.values.empty()) {
        for (std::size_t i = 0; i < spec.values.size(); ++i) {
            if (spec.values[i] < 0) throw InputError("lambda grid values must be non-negative");
            if (i > 0 && !(spec.values[i] < spec.values[i - 1]))
                throw InputError("lambda grid must be strictly decreasing");
        }
        return spec.values;
    }
    if (!(lmax > 0)) return {0.0};
    if (spec.n == 1) return {lmax};
    std::vector<double> grid(spec.n);
    const double step = std::log(spec.ratio) / static_cast<double>(spec.n - 1);
    for (std::size_t i = 0; i < spec.n; ++i) grid[i] = lmax * std::exp(step * static_cast<double>(i));
    return grid;
}

std::size_t LambdaPath::n_failed() const {
    std::size_t n = 0;
    for (const auto& f : fits)
        if (!f) ++n;
    return n;
}

LambdaPath select_lambda(const QuadratureScheme& scheme, Method method, double nu,
                         const GridSpec& grid, const TuningOptions& opts) {
    return select_lambda(scheme, method, nu, mle(scheme).coef.beta, grid, opts);
}

LambdaPath select_lambda(const QuadratureScheme& scheme, Method method, double nu,
                         const Eigen::VectorXd& beta_tilde, const GridSpec& grid,
                         const TuningOptions& opts) {
    if (method == Method::MLE) throw InputError("lambda path needs method al or alds");
    LambdaPath path;
    path.beta_tilde = beta_tilde;
    path.grid = make_grid(grid, grid.values.empty() ? lambda_max(scheme, beta_tilde, nu) : 0.0);
    const std::size_t n = path.grid.size();
    path.fits.resize(n);
    path.bic.assign(n, std::numeric_limits<double>::quiet_NaN());
    path.errors.resize(n);

    std::optional<AldsLinearization> lin;
    if (method == Method::ALDS) lin = linearize(scheme, beta_tilde);
    Eigen::VectorXd warm = beta_tilde;

    for (std::size_t i = 0; i < n; ++i) {
        try {
            const PenaltyWeights w = adaptive_weights(beta_tilde, nu, path.grid[i], scheme.has_intercept);
            FitResult fit = method == Method::AL ? fit_al(scheme, w, warm, opts.al)
                                                 : fit_alds(scheme, w, *lin, opts.alds);
            fit.lambda = path.grid[i];
            if (method == Method::AL) warm = fit.coef.beta;
            path.bic[i] = bic(fit, scheme);
            path.fits[i] = std::move(fit);
        } catch (const std::exception& e) {
            path.errors[i] = e.what();
        }
    }

    // BIC differences at rounding level (same support, fits equal up to solver
    // tolerance) count as ties and keep the larger lambda.
    bool found = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!path.fits[i]) continue;
        const double best = path.bic[path.selected];
        if (!found || path.bic[i] < best - kBicTieTol * (1.0 + std::abs(best))) {
            path.selected = i;
            found = true;
        }
    }
    if (!found)
        throw ConvergenceError("every fit on the lambda path failed; first error: " + path.errors[0],
                               beta_tilde);
    return path;
}

void write_path_csv(const LambdaPath& path, const std::vector<std::string>& names,
                    std::ostream& out) {
    CsvTable t;
    t.header = {"lambda", "bic", "p_star"};
    t.header.insert(t.header.end(), names.begin(), names.end());
    for (std::size_t i = 0; i < path.grid.size(); ++i) {
        std::vector<std::string> row{format_double(path.grid[i])};
        if (path.fits[i]) {
            const FitResult& f = *path.fits[i];
            row.push_back(format_double(path.bic[i]));
            row.push_back(std::to_string(f.support.size()));
            for (Eigen::Index j = 0; j < f.coef.beta.size(); ++j) row.push_back(format_double(f.coef.beta[j]));
        } else {
            row.push_back("NA");
            row.push_back("NA");
            for (std::size_t j = 0; j < names.size(); ++j) row.push_back("NA");
        }
        t.rows.push_back(std::move(row));
    }
    write_csv(t, out);
}

void write_path_csv(const LambdaPath& path, const std::vector<std::string>& names,
                    const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw InputError("cannot write " + file.string());
    write_path_csv(path, names, out);
}

} // namespace ppsel
