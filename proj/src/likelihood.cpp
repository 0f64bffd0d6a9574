#include "ppsel/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ppsel/error.hpp"

namespace ppsel {

namespace {

void check_dim(const QuadratureScheme& s, const Eigen::VectorXd& beta) {
    if (beta.size() != s.design.cols())
        throw InputError("coefficient vector has length " + std::to_string(beta.size()) +
                         ", design has " + std::to_string(s.design.cols()) + " columns");
}

std::vector<Eigen::Index> free_indices(const std::vector<bool>& free, Eigen::Index p) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < p; ++j)
        if (free.empty() || free[static_cast<std::size_t>(j)]) idx.push_back(j);
    return idx;
}

} // namespace

std::string to_string(Method m) {
    switch (m) {
    case Method::MLE: return "MLE";
    case Method::AL: return "AL";
    case Method::ALDS: return "ALDS";
    }
    return "?";
}

Method parse_method(const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "mle") return Method::MLE;
    if (t == "al") return Method::AL;
    if (t == "alds") return Method::ALDS;
    throw InputError("unknown method '" + text + "' (expected mle, al or alds)");
}

std::vector<std::size_t> apply_hard_zero(Eigen::VectorXd& beta) {
    std::vector<std::size_t> support;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        if (std::abs(beta[j]) < kHardZero)
            beta[j] = 0.0;
        else
            support.push_back(static_cast<std::size_t>(j));
    }
    return support;
}

void LikelihoodWorkspace::update(const Eigen::VectorXd& beta) {
    if (valid_ && tag_.size() == beta.size() && tag_ == beta) return;
    check_dim(*scheme_, beta);
    eta_.noalias() = scheme_->design * beta;
    clamped_ = false;
    for (Eigen::Index i = 0; i < eta_.size(); ++i) {
        if (std::isnan(eta_[i])) throw NumericRangeError("linear predictor is NaN");
        if (eta_[i] > kEtaClamp) {
            eta_[i] = kEtaClamp;
            clamped_ = true;
        } else if (eta_[i] < -kEtaClamp) {
            eta_[i] = -kEtaClamp;
            clamped_ = true;
        }
    }
    rho_ = eta_.array().exp().matrix();
    tag_ = beta;
    valid_ = true;
}

const Eigen::VectorXd& LikelihoodWorkspace::rho(const Eigen::VectorXd& beta) {
    update(beta);
    return rho_;
}

const Eigen::VectorXd& LikelihoodWorkspace::eta(const Eigen::VectorXd& beta) {
    update(beta);
    return eta_;
}

double LikelihoodWorkspace::loglik(const Eigen::VectorXd& beta) {
    update(beta);
    const auto& s = *scheme_;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < rho_.size(); ++i) {
        // 0 * log(rho) = 0 for dummy points
        const double data_term = s.response[i] > 0 ? s.response[i] * eta_[i] : 0.0;
        acc += s.weights[i] * (data_term - rho_[i]);
    }
    if (!std::isfinite(acc)) throw NumericRangeError("log-likelihood is not finite");
    return acc;
}

Eigen::VectorXd LikelihoodWorkspace::score(const Eigen::VectorXd& beta) {
    update(beta);
    const auto& s = *scheme_;
    const Eigen::VectorXd r = s.weights.cwiseProduct(s.response - rho_);
    Eigen::VectorXd u = s.design.transpose() * r;
    if (!u.allFinite()) throw NumericRangeError("score is not finite");
    return u;
}

Eigen::MatrixXd LikelihoodWorkspace::sensitivity(const Eigen::VectorXd& beta) {
    update(beta);
    const auto& s = *scheme_;
    const Eigen::VectorXd wr = s.weights.cwiseProduct(rho_);
    const Eigen::Index p = s.design.cols();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
    a.selfadjointView<Eigen::Lower>().rankUpdate(
        (s.design.array().colwise() * wr.array().sqrt()).matrix().transpose());
    Eigen::MatrixXd full = a.selfadjointView<Eigen::Lower>();
    if (!full.allFinite()) throw NumericRangeError("sensitivity matrix is not finite");
    return full;
}

double loglik(const QuadratureScheme& scheme, const Eigen::VectorXd& beta) {
    LikelihoodWorkspace ws(scheme);
    return ws.loglik(beta);
}

Eigen::VectorXd score(const QuadratureScheme& scheme, const Eigen::VectorXd& beta) {
    LikelihoodWorkspace ws(scheme);
    return ws.score(beta);
}

Eigen::MatrixXd sensitivity(const QuadratureScheme& scheme, const Eigen::VectorXd& beta) {
    LikelihoodWorkspace ws(scheme);
    return ws.sensitivity(beta);
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& sym, const Eigen::VectorXd& rhs) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sym);
    const Eigen::VectorXd d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !(dmax > 0) || d.minCoeff() <= 1e-13 * dmax)
        throw RankDeficientError("sensitivity matrix is singular: the design is rank deficient");
    return ldlt.solve(rhs);
}

FitResult mle(const QuadratureScheme& scheme, const Eigen::VectorXd& init, const MleOptions& opts,
              const std::vector<bool>& free) {
    check_dim(scheme, init);
    const Eigen::Index p = init.size();
    if (!free.empty() && static_cast<Eigen::Index>(free.size()) != p)
        throw InputError("free mask has the wrong length");
    if (scheme.n_data == 0)
        throw InputError("maximum likelihood needs at least one data point");
    const auto idx = free_indices(free, p);
    const auto k = static_cast<Eigen::Index>(idx.size());
    const double m_total = static_cast<double>(scheme.size());

    LikelihoodWorkspace ws(scheme);
    Eigen::VectorXd beta = init;
    double ll = ws.loglik(beta);

    auto restricted_score = [&](const Eigen::VectorXd& b) {
        const Eigen::VectorXd u = ws.score(b);
        Eigen::VectorXd r(k);
        for (Eigen::Index a = 0; a < k; ++a) r[a] = u[idx[static_cast<std::size_t>(a)]];
        return r;
    };
    auto newton_step = [&](const Eigen::VectorXd& b, const Eigen::VectorXd& u) {
        const Eigen::MatrixXd full = ws.sensitivity(b);
        Eigen::MatrixXd a(k, k);
        for (Eigen::Index r = 0; r < k; ++r)
            for (Eigen::Index c = 0; c < k; ++c)
                a(r, c) = full(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
        const Eigen::VectorXd d = solve_spd(a, u);
        Eigen::VectorXd step = Eigen::VectorXd::Zero(p);
        for (Eigen::Index r = 0; r < k; ++r) step[idx[static_cast<std::size_t>(r)]] = d[r];
        return step;
    };

    FitResult fit;
    fit.method = Method::MLE;
    int it = 0;
    bool converged = false;
    Eigen::VectorXd u = restricted_score(beta);
    while (true) {
        if (k == 0 || u.cwiseAbs().maxCoeff() / m_total < opts.tol) {
            converged = true;
            break;
        }
        if (it >= opts.max_iter) break;
        const Eigen::VectorXd step = newton_step(beta, u);
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h <= 30; ++h, t *= 0.5) {
            const Eigen::VectorXd cand = beta + t * step;
            double llc;
            try {
                llc = ws.loglik(cand);
            } catch (const NumericRangeError&) {
                continue;
            }
            if (llc >= ll - 1e-12 * (1.0 + std::abs(ll))) {
                beta = cand;
                ll = llc;
                accepted = true;
                break;
            }
        }
        ++it;
        if (!accepted) break;
        u = restricted_score(beta);
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "Newton iterations did not converge after " << it << " steps (scaled score "
            << u.cwiseAbs().maxCoeff() / m_total << ")";
        throw ConvergenceError(msg.str(), beta);
    }
    // One extra Newton step drives the score to rounding level; kept only if it helps.
    if (k > 0) {
        try {
            const Eigen::VectorXd cand = beta + newton_step(beta, u);
            const Eigen::VectorXd uc = restricted_score(cand);
            if (uc.cwiseAbs().maxCoeff() < u.cwiseAbs().maxCoeff()) {
                beta = cand;
                ll = ws.loglik(beta);
            }
        } catch (const NumericRangeError&) {
        }
    }

    fit.coef.beta = beta;
    fit.coef.names = scheme.column_names;
    for (Eigen::Index j = 0; j < p; ++j)
        if (beta[j] != 0.0) fit.support.push_back(static_cast<std::size_t>(j));
    fit.objective = ll;
    fit.outer_iterations = it;
    fit.kkt_residual = k > 0 ? restricted_score(beta).cwiseAbs().maxCoeff() / m_total : 0.0;
    fit.stats = scheme.stats;
    ws.rho(beta);
    fit.clamped = ws.clamped();
    return fit;
}

FitResult mle(const QuadratureScheme& scheme, const MleOptions& opts) {
    Eigen::VectorXd init = Eigen::VectorXd::Zero(scheme.design.cols());
    if (scheme.has_intercept && scheme.n_data > 0 && init.size() > 0)
        init[0] = std::log(static_cast<double>(scheme.n_data) / scheme.weights.sum());
    return mle(scheme, init, opts);
}

} // namespace ppsel
