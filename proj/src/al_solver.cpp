#include "ppsel/al_solver.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "ppsel/error.hpp"
#include "ppsel/likelihood.hpp"

namespace ppsel {

namespace {

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

} // namespace

void PenaltyWeights::validate(Eigen::Index p) const {
    if (lambda.size() != p)
        throw InputError("penalty vector has length " + std::to_string(lambda.size()) +
                         ", expected " + std::to_string(p));
    for (Eigen::Index j = 0; j < p; ++j)
        if (std::isnan(lambda[j]) || lambda[j] < 0)
            throw InputError("penalty weights must be non-negative");
}

WorkingData irls_working_data(const QuadratureScheme& scheme, const Eigen::VectorXd& beta_check) {
    LikelihoodWorkspace ws(scheme);
    const Eigen::VectorXd& eta = ws.eta(beta_check);
    const Eigen::VectorXd& mu = ws.rho(beta_check);
    WorkingData wd;
    wd.psi = scheme.weights.cwiseProduct(mu);
    wd.y_star = eta + (scheme.response - mu).cwiseQuotient(mu);
    if (!wd.psi.allFinite() || !wd.y_star.allFinite())
        throw NumericRangeError("IRLS working data overflow");
    return wd;
}

CdResult cd_solve_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& cross,
                       const PenaltyWeights& lambdas, double normalizer, const Eigen::VectorXd& init,
                       const CdOptions& opts) {
    const Eigen::Index p = gram.rows();
    if (gram.cols() != p || cross.size() != p || init.size() != p)
        throw InputError("coordinate descent inputs have inconsistent dimensions");
    lambdas.validate(p);
    if (!(normalizer > 0)) throw InputError("normalizer must be positive");

    Eigen::VectorXd beta = init;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (lambdas.frozen(j)) {
            beta[j] = 0.0;
            continue;
        }
        if (!(gram(j, j) > 0))
            throw DegenerateColumnError("design column " + std::to_string(j) +
                                            " has zero weighted norm",
                                        static_cast<std::size_t>(j));
    }
    Eigen::VectorXd g = gram * beta;

    auto update = [&](Eigen::Index j) {
        const double d = gram(j, j);
        const double r = cross[j] - (g[j] - d * beta[j]);
        const double next = soft_threshold(r, lambdas.lambda[j] * normalizer) / d;
        const double delta = next - beta[j];
        if (delta != 0.0) {
            g.noalias() += delta * gram.col(j);
            beta[j] = next;
        }
        return std::abs(delta);
    };

    CdResult res;
    int cycles = 0;
    auto full_sweep = [&]() {
        double change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j)
            if (!lambdas.frozen(j)) change = std::max(change, update(j));
        ++cycles;
        return change;
    };

    for (int k = 0; k < 2; ++k) full_sweep();
    while (true) {
        if (cycles >= opts.max_iter) {
            std::ostringstream msg;
            msg << "coordinate descent did not converge in " << cycles << " cycles";
            throw ConvergenceError(msg.str(), beta);
        }
        std::vector<Eigen::Index> active;
        for (Eigen::Index j = 0; j < p; ++j)
            if (beta[j] != 0.0 && !lambdas.frozen(j)) active.push_back(j);
        while (cycles < opts.max_iter) {
            double change = 0.0;
            for (Eigen::Index j : active) change = std::max(change, update(j));
            ++cycles;
            if (change < opts.tol) break;
        }
        if (full_sweep() < opts.tol) break;
    }
    res.beta = beta;
    res.cycles = cycles;
    return res;
}

CdResult cd_solve(const Eigen::VectorXd& y_star, const Eigen::VectorXd& psi,
                  const Eigen::MatrixXd& design, const PenaltyWeights& lambdas, double normalizer,
                  const Eigen::VectorXd& init, const CdOptions& opts) {
    if (y_star.size() != design.rows() || psi.size() != design.rows())
        throw InputError("working data length does not match the design");
    const Eigen::Index p = design.cols();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(
        (design.array().colwise() * psi.array().sqrt()).matrix().transpose());
    gram = gram.selfadjointView<Eigen::Lower>();
    const Eigen::VectorXd cross = design.transpose() * psi.cwiseProduct(y_star);
    return cd_solve_gram(gram, cross, lambdas, normalizer, init, opts);
}

double al_objective(const QuadratureScheme& scheme, const Eigen::VectorXd& beta,
                    const PenaltyWeights& lambdas) {
    const double m = static_cast<double>(scheme.n_data);
    double pen = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        if (lambdas.frozen(j)) {
            if (beta[j] != 0.0) return std::numeric_limits<double>::infinity();
            continue;
        }
        pen += lambdas.lambda[j] * std::abs(beta[j]);
    }
    return -loglik(scheme, beta) / m + pen;
}

double al_kkt_residual(const QuadratureScheme& scheme, const Eigen::VectorXd& beta,
                       const PenaltyWeights& lambdas) {
    const double m = static_cast<double>(scheme.n_data);
    const Eigen::VectorXd u = score(scheme, beta) / m;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        if (lambdas.frozen(j)) continue;
        const double lam = lambdas.lambda[j];
        const double r = beta[j] != 0.0 ? std::abs(u[j] - lam * sign(beta[j]))
                                        : std::max(0.0, std::abs(u[j]) - lam);
        worst = std::max(worst, r);
    }
    return worst;
}

FitResult fit_al(const QuadratureScheme& scheme, const PenaltyWeights& lambdas,
                 const std::optional<Eigen::VectorXd>& init, const AlOptions& opts) {
    const Eigen::Index p = scheme.design.cols();
    lambdas.validate(p);
    if (scheme.n_data == 0)
        throw InputError("adaptive lasso needs at least one data point (normalizer m = 0)");
    const double m = static_cast<double>(scheme.n_data);

    Eigen::VectorXd beta = init ? *init : mle(scheme).coef.beta;
    if (beta.size() != p) throw InputError("initial coefficient vector has the wrong length");
    for (Eigen::Index j = 0; j < p; ++j)
        if (lambdas.frozen(j)) beta[j] = 0.0;

    LikelihoodWorkspace ws(scheme);
    auto objective = [&](const Eigen::VectorXd& b) {
        double pen = 0.0;
        for (Eigen::Index j = 0; j < p; ++j)
            if (!lambdas.frozen(j)) pen += lambdas.lambda[j] * std::abs(b[j]);
        return -ws.loglik(b) / m + pen;
    };
    auto kkt = [&](const Eigen::VectorXd& b) {
        const Eigen::VectorXd u = ws.score(b) / m;
        double worst = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (lambdas.frozen(j)) continue;
            const double lam = lambdas.lambda[j];
            worst = std::max(worst, b[j] != 0.0 ? std::abs(u[j] - lam * sign(b[j]))
                                                : std::max(0.0, std::abs(u[j]) - lam));
        }
        return worst;
    };

    CdOptions cd_opts;
    cd_opts.tol = opts.tol_inner;
    double f = objective(beta);
    int outer = 0, inner = 0, stagnant = 0;
    bool converged = false;
    std::deque<Eigen::VectorXd> history;

    while (outer < opts.max_outer) {
        ++outer;
        const Eigen::VectorXd& rho = ws.rho(beta);
        const Eigen::VectorXd psi = scheme.weights.cwiseProduct(rho);
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(
            (scheme.design.array().colwise() * psi.array().sqrt()).matrix().transpose());
        gram = gram.selfadjointView<Eigen::Lower>();
        // Z' Psi y* = Z' Psi Z beta + U(beta), avoiding the large 1/w entries of y*.
        const Eigen::VectorXd cross = gram * beta + ws.score(beta);
        const CdResult cd = cd_solve_gram(gram, cross, lambdas, m, beta, cd_opts);
        inner += cd.cycles;

        const Eigen::VectorXd dir = cd.beta - beta;
        double t = 1.0;
        Eigen::VectorXd next = cd.beta;
        double f_next = f;
        bool accepted = false;
        for (int h = 0; h <= 30; ++h, t *= 0.5) {
            next = beta + t * dir;
            try {
                f_next = objective(next);
            } catch (const NumericRangeError&) {
                continue;
            }
            if (f_next <= f + 1e-12 * (1.0 + std::abs(f))) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // No descent along the IRLS direction: already optimal to rounding.
            next = beta;
            f_next = f;
        }
        const double change = (next - beta).cwiseAbs().maxCoeff();
        beta = next;
        f = f_next;

        history.push_back(beta);
        if (history.size() > 4) history.pop_front();
        if (change < opts.tol_outer) {
            if (kkt(beta) < opts.kkt_tol || ++stagnant >= 3 || !accepted) {
                converged = true;
                break;
            }
        } else if (history.size() == 4 &&
                   ((history[3] - history[1]).cwiseAbs().maxCoeff() < opts.tol_outer ||
                    (history[3] - history[0]).cwiseAbs().maxCoeff() < opts.tol_outer)) {
            throw ConvergenceError("IRLS outer loop is oscillating", beta);
        }
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "adaptive lasso did not converge in " << opts.max_outer << " IRLS iterations";
        throw ConvergenceError(msg.str(), beta);
    }

    FitResult fit;
    fit.method = Method::AL;
    fit.support = apply_hard_zero(beta);
    fit.coef.beta = beta;
    fit.coef.names = scheme.column_names;
    fit.objective = objective(beta);
    fit.outer_iterations = outer;
    fit.inner_iterations = inner;
    fit.kkt_residual = kkt(beta);
    fit.penalty = lambdas.lambda;
    fit.stats = scheme.stats;
    ws.rho(beta);
    fit.clamped = ws.clamped();
    return fit;
}

} // namespace ppsel
