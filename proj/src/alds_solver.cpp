#include "ppsel/alds_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ppsel/error.hpp"
#include "ppsel/likelihood.hpp"

namespace ppsel {

void AldsProblem::validate() const {
    const Eigen::Index p = dimension();
    if (score.size() != p || lambdas.size() != p || sensitivity.rows() != p ||
        sensitivity.cols() != p)
        throw InputError("ALDS problem has inconsistent dimensions");
    if (!unpenalized.empty() && static_cast<Eigen::Index>(unpenalized.size()) != p)
        throw InputError("unpenalized mask has the wrong length");
    if (!(mu > 0) || !std::isfinite(mu)) throw InputError("ALDS normalizer mu must be positive");
    for (Eigen::Index j = 0; j < p; ++j) {
        if (is_unpenalized(j)) continue;
        if (!(lambdas[j] > 0) || !std::isfinite(lambdas[j]))
            throw InputError("ALDS penalty lambda_" + std::to_string(j) +
                             " must be positive and finite (Lambda^-1 is undefined)");
    }
    if (!beta_tilde.allFinite() || !score.allFinite() || !sensitivity.allFinite())
        throw NumericRangeError("ALDS problem contains non-finite values");
}

Eigen::VectorXd AldsProblem::constraint_weights() const {
    Eigen::VectorXd c = lambdas;
    for (Eigen::Index j = 0; j < c.size(); ++j)
        if (is_unpenalized(j)) c[j] = kUnpenalizedSlack;
    return c;
}

Eigen::VectorXd AldsProblem::delta(const Eigen::VectorXd& beta) const {
    return score + sensitivity * (beta_tilde - beta);
}

namespace {

// Penalized coordinates within this fraction of max(1, |beta_tilde_j|) of zero
// are candidates for an exact zero after the LP.
constexpr double kSnapTol = 1e-6;

// shifted: variables (beta - beta_tilde, u). Same rows, so the same multipliers,
// but the right-hand sides no longer carry the large A beta_tilde terms.
LinearProgram assemble_lp(const AldsProblem& problem, bool shifted) {
    problem.validate();
    const Eigen::Index p = problem.dimension();
    const Eigen::VectorXd cw = problem.constraint_weights();
    Eigen::VectorXd obj_w = problem.lambdas;
    for (Eigen::Index j = 0; j < p; ++j)
        if (problem.is_unpenalized(j)) obj_w[j] = 0.0;

    // row scale s_j = 1 / (mu c_j)
    const Eigen::VectorXd s = (problem.mu * cw).cwiseInverse();
    const Eigen::MatrixXd scaled_a = s.asDiagonal() * problem.sensitivity;
    const Eigen::VectorXd offset =
        shifted ? Eigen::VectorXd(s.cwiseProduct(problem.score))
                : Eigen::VectorXd(s.cwiseProduct(problem.score + problem.sensitivity * problem.beta_tilde));
    const Eigen::VectorXd u_shift =
        shifted ? Eigen::VectorXd(obj_w.cwiseProduct(problem.beta_tilde)) : Eigen::VectorXd::Zero(p);

    LinearProgram lp;
    lp.c = Eigen::VectorXd::Zero(2 * p);
    lp.c.tail(p).setOnes();
    lp.G = Eigen::MatrixXd::Zero(4 * p, 2 * p);
    lp.h = Eigen::VectorXd::Zero(4 * p);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
    lp.G.block(0, 0, p, p) = obj_w.asDiagonal();
    lp.G.block(0, p, p, p) = -eye;
    lp.h.head(p) = -u_shift;
    lp.G.block(p, 0, p, p) = -Eigen::MatrixXd(obj_w.asDiagonal());
    lp.G.block(p, p, p, p) = -eye;
    lp.h.segment(p, p) = u_shift;
    // mu^-1 C^-1 Delta(beta) = offset - scaled_a beta
    lp.G.block(2 * p, 0, p, p) = -scaled_a;
    lp.h.segment(2 * p, p) = Eigen::VectorXd::Ones(p) - offset;
    lp.G.block(3 * p, 0, p, p) = scaled_a;
    lp.h.segment(3 * p, p) = Eigen::VectorXd::Ones(p) + offset;
    return lp;
}

// The tight unpenalized rows (and every row when lambda is tiny) are below
// what the vertex solve resolves in double precision. Correct beta on its
// support plus the unpenalized coordinates so the active or violated rows sit
// just inside their box; zeros stay zero.
Eigen::VectorXd make_feasible(const AldsProblem& problem, Eigen::VectorXd beta0) {
    const Eigen::Index p = problem.dimension();
    const Eigen::VectorXd cw = problem.constraint_weights();
    const Eigen::VectorXd bound = problem.mu * cw;
    auto box_excess = [&](const Eigen::VectorXd& b) {
        return (problem.delta(b).cwiseAbs().cwiseQuotient(bound).array() - 1.0).maxCoeff();
    };
    double excess = box_excess(beta0);
    if (excess > 0.0) {
        std::vector<Eigen::Index> cols;
        for (Eigen::Index j = 0; j < p; ++j)
            if (problem.is_unpenalized(j) || std::abs(beta0[j]) >= kHardZero) cols.push_back(j);
        std::vector<bool> pinned(static_cast<std::size_t>(p), false);
        Eigen::VectorXd beta = beta0;
        // Relative margin per row: a few ulps of the terms that make up Delta_i.
        constexpr double eps = std::numeric_limits<double>::epsilon();
        const Eigen::VectorXd scale_b = beta0.cwiseAbs().cwiseMax(problem.beta_tilde.cwiseAbs());
        const Eigen::VectorXd resolution =
            8.0 * eps * (problem.sensitivity.cwiseAbs() * scale_b + problem.score.cwiseAbs());
        const Eigen::VectorXd margin =
            (4.0 * resolution.cwiseQuotient(bound)).cwiseMax(1e-12).cwiseMin(0.5);
        for (int round = 0; round < 5 && excess > 0.0 && !cols.empty(); ++round) {
            const Eigen::VectorXd d = problem.delta(beta);
            for (Eigen::Index i = 0; i < p; ++i)
                if (std::abs(d[i]) >= bound[i] * (1.0 - std::max(1e-7, 2.0 * margin[i])))
                    pinned[static_cast<std::size_t>(i)] = true;
            std::vector<Eigen::Index> rows;
            for (Eigen::Index i = 0; i < p; ++i)
                if (pinned[static_cast<std::size_t>(i)]) rows.push_back(i);
            Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
            Eigen::VectorXd rhs(sub.rows());
            for (Eigen::Index r = 0; r < sub.rows(); ++r) {
                const Eigen::Index i = rows[static_cast<std::size_t>(r)];
                const double lim = bound[i] * (1.0 - margin[i]);
                // Delta(beta + e) = Delta(beta) - A e
                rhs[r] = d[i] - std::clamp(d[i], -lim, lim);
                for (Eigen::Index c = 0; c < sub.cols(); ++c)
                    sub(r, c) = problem.sensitivity(i, cols[static_cast<std::size_t>(c)]);
            }
            const Eigen::VectorXd e = sub.completeOrthogonalDecomposition().solve(rhs);
            for (Eigen::Index c = 0; c < sub.cols(); ++c) beta[cols[static_cast<std::size_t>(c)]] += e[c];
            excess = box_excess(beta);
        }
        if (excess <= 0.0) beta0 = beta;
    }
    if (excess > 0.0) {
        // Fall back to shrinking toward the Newton point, where Delta = 0.
        Eigen::VectorXd newton;
        bool have_newton = true;
        try {
            newton = problem.beta_tilde + solve_spd(problem.sensitivity, problem.score);
        } catch (const RankDeficientError&) {
            have_newton = false;
        }
        if (have_newton) {
            double theta = 2.0 * excess / (1.0 + excess);
            for (int k = 0; k < 60; ++k) {
                const Eigen::VectorXd cand = newton + (1.0 - theta) * (beta0 - newton);
                if (box_excess(cand) <= 0.0) {
                    beta0 = cand;
                    break;
                }
                if (theta == 1.0) break;
                theta = std::min(1.0, 2.0 * theta);
            }
        }
    }
    return beta0;
}

} // namespace

LinearProgram build_alds_lp(const AldsProblem& problem) { return assemble_lp(problem, false); }

double KktReport::max() const {
    return std::max(std::max(primal_feasibility, dual_feasibility),
                    std::max(primal_slackness, dual_slackness));
}

KktReport verify_kkt(const AldsProblem& problem, const Eigen::VectorXd& beta_hat,
                     const Eigen::VectorXd& gamma_hat) {
    const Eigen::Index p = problem.dimension();
    if (beta_hat.size() != p || gamma_hat.size() != p)
        throw InputError("KKT check: candidate has the wrong length");
    const Eigen::VectorXd cw = problem.constraint_weights();
    const double mu = problem.mu;
    const Eigen::VectorXd d = problem.delta(beta_hat);
    const Eigen::VectorXd g_scaled = gamma_hat.cwiseQuotient(cw);
    // v_j = mu^-1 (gamma' C^-1 A)_j
    const Eigen::VectorXd v = problem.sensitivity.transpose() * g_scaled / mu;

    KktReport r;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) worst = std::max(worst, std::abs(d[j]) / (mu * cw[j]));
    r.primal_feasibility = std::max(0.0, worst - 1.0);

    double dual = 0.0;
    double l1 = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (problem.is_unpenalized(j)) {
            dual = std::max(dual, std::abs(v[j]));
        } else {
            dual = std::max(dual, std::abs(v[j]) / problem.lambdas[j] - 1.0);
            l1 += problem.lambdas[j] * std::abs(beta_hat[j]);
        }
    }
    r.dual_feasibility = std::max(0.0, dual);
    r.primal_slackness = std::abs(v.dot(beta_hat) - l1);
    r.dual_slackness = std::abs(g_scaled.dot(d) / mu - gamma_hat.lpNorm<1>());
    return r;
}

AldsSolution solve_alds(const AldsProblem& problem, const AldsOptions& opts) {
    const Eigen::Index p = problem.dimension();
    const LinearProgram lp = assemble_lp(problem, true);
    AldsSolution sol;
    sol.lp = solve_lp(lp, opts.lp);
    if (sol.lp.status == LpStatus::Infeasible) {
        std::ostringstream msg;
        msg << "internal error: ALDS linear program reported infeasible (p = " << p
            << ", mu = " << problem.mu << ", " << sol.lp.iterations
            << " pivots); the Newton point should always be feasible";
        throw std::logic_error(msg.str());
    }
    if (sol.lp.status == LpStatus::Unbounded)
        throw NumericRangeError("ALDS linear program is unbounded; check the penalty and the design");

    sol.beta = problem.beta_tilde + sol.lp.x.head(p);
    // Vertex zeros come back as beta_tilde - beta_tilde up to rounding.
    for (Eigen::Index j = 0; j < p; ++j)
        if (!problem.is_unpenalized(j) && std::abs(sol.beta[j]) < kHardZero) sol.beta[j] = 0.0;
    sol.gamma = sol.lp.ineq_dual.segment(2 * p, p) - sol.lp.ineq_dual.segment(3 * p, p);

    sol.beta = make_feasible(problem, sol.beta);
    sol.kkt = verify_kkt(problem, sol.beta, sol.gamma);

    // In shifted coordinates a zero is only resolved to the simplex tolerance
    // relative to beta_tilde, which lambda_j then amplifies in the objective.
    // Snap such coordinates to zero when that does not hurt the certificate.
    Eigen::VectorXd snapped = sol.beta;
    bool any = false;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (problem.is_unpenalized(j) || snapped[j] == 0.0) continue;
        if (std::abs(snapped[j]) <= kSnapTol * std::max(1.0, std::abs(problem.beta_tilde[j]))) {
            snapped[j] = 0.0;
            any = true;
        }
    }
    if (any) {
        snapped = make_feasible(problem, snapped);
        const KktReport k = verify_kkt(problem, snapped, sol.gamma);
        if (k.max() < sol.kkt.max()) {
            sol.beta = snapped;
            sol.kkt = k;
        }
    }
    return sol;
}

AldsProblem make_alds_problem(const QuadratureScheme& scheme, const Eigen::VectorXd& lambdas,
                              const Eigen::VectorXd& beta_tilde) {
    if (scheme.n_data == 0) throw InputError("ALDS needs at least one data point (mu = 0)");
    AldsProblem prob;
    prob.beta_tilde = beta_tilde;
    prob.score = score(scheme, beta_tilde);
    prob.sensitivity = sensitivity(scheme, beta_tilde);
    prob.lambdas = lambdas;
    prob.mu = static_cast<double>(scheme.n_data);
    prob.unpenalized.assign(static_cast<std::size_t>(lambdas.size()), false);
    for (Eigen::Index j = 0; j < lambdas.size(); ++j)
        prob.unpenalized[static_cast<std::size_t>(j)] = lambdas[j] == 0.0;
    return prob;
}

AldsLinearization linearize(const QuadratureScheme& scheme, const Eigen::VectorXd& beta_tilde) {
    if (beta_tilde.size() != scheme.design.cols())
        throw InputError("initial estimate has the wrong length");
    return {beta_tilde, score(scheme, beta_tilde), sensitivity(scheme, beta_tilde)};
}

FitResult fit_alds(const QuadratureScheme& scheme, const PenaltyWeights& lambdas,
                   const std::optional<Eigen::VectorXd>& beta_tilde, const AldsOptions& opts) {
    if (scheme.n_data == 0) throw InputError("ALDS needs at least one data point (mu = 0)");
    return fit_alds(scheme, lambdas, linearize(scheme, beta_tilde ? *beta_tilde : mle(scheme).coef.beta),
                    opts);
}

AldsProblem restrict_problem(const AldsLinearization& lin, const PenaltyWeights& lambdas, double mu,
                             std::vector<Eigen::Index>& kept) {
    const Eigen::Index p = lin.beta_tilde.size();
    lambdas.validate(p);
    kept.clear();
    for (Eigen::Index j = 0; j < p; ++j)
        if (!lambdas.frozen(j)) kept.push_back(j);
    const auto k = static_cast<Eigen::Index>(kept.size());
    AldsProblem prob;
    prob.beta_tilde.resize(k);
    prob.score.resize(k);
    prob.sensitivity.resize(k, k);
    prob.lambdas.resize(k);
    prob.mu = mu;
    prob.unpenalized.assign(static_cast<std::size_t>(k), false);
    for (Eigen::Index a = 0; a < k; ++a) {
        const Eigen::Index ja = kept[static_cast<std::size_t>(a)];
        prob.beta_tilde[a] = lin.beta_tilde[ja];
        double s = lin.score[ja];
        for (Eigen::Index j = 0; j < p; ++j)
            if (lambdas.frozen(j)) s += lin.sensitivity(ja, j) * lin.beta_tilde[j];
        prob.score[a] = s;
        prob.lambdas[a] = lambdas.lambda[ja];
        prob.unpenalized[static_cast<std::size_t>(a)] = lambdas.lambda[ja] == 0.0;
        for (Eigen::Index b = 0; b < k; ++b)
            prob.sensitivity(a, b) = lin.sensitivity(ja, kept[static_cast<std::size_t>(b)]);
    }
    return prob;
}

FitResult fit_alds(const QuadratureScheme& scheme, const PenaltyWeights& lambdas,
                   const AldsLinearization& lin, const AldsOptions& opts) {
    const Eigen::Index p = scheme.design.cols();
    lambdas.validate(p);
    if (scheme.n_data == 0) throw InputError("ALDS needs at least one data point (mu = 0)");
    if (lin.beta_tilde.size() != p || lin.score.size() != p || lin.sensitivity.rows() != p)
        throw InputError("linearization does not match the scheme");
    std::vector<Eigen::Index> keep;
    const AldsProblem prob = restrict_problem(lin, lambdas, static_cast<double>(scheme.n_data), keep);
    const auto k = static_cast<Eigen::Index>(keep.size());

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    FitResult fit;
    fit.method = Method::ALDS;
    if (k > 0) {
        const AldsSolution sol = solve_alds(prob, opts);
        for (Eigen::Index a = 0; a < k; ++a) beta[keep[static_cast<std::size_t>(a)]] = sol.beta[a];
        fit.kkt_residual = sol.kkt.max();
        fit.outer_iterations = sol.lp.iterations;
    }

    fit.support = apply_hard_zero(beta);
    double obj = 0.0;
    for (Eigen::Index j = 0; j < p; ++j)
        if (!lambdas.frozen(j)) obj += lambdas.lambda[j] * std::abs(beta[j]);
    fit.coef.beta = beta;
    fit.coef.names = scheme.column_names;
    fit.objective = obj;
    fit.penalty = lambdas.lambda;
    fit.stats = scheme.stats;
    LikelihoodWorkspace ws(scheme);
    ws.rho(beta);
    fit.clamped = ws.clamped();
    return fit;
}

} // namespace ppsel
