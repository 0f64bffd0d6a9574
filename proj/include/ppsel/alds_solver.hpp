#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ppsel/al_solver.hpp"
#include "ppsel/fit_result.hpp"
#include "ppsel/lp.hpp"
#include "ppsel/quadrature.hpp"

namespace ppsel {

// Unpenalized coordinates keep |Delta_j| <= kUnpenalizedSlack * mu in place of
// the lambda-scaled bound.
inline constexpr double kUnpenalizedSlack = 1e-8;

// Linearized Dantzig problem around beta_tilde:
//   min ||Lambda beta||_1  s.t.  mu^-1 |Lambda^-1 Delta(beta)|_inf <= 1,
//   Delta(beta) = U(beta_tilde) + A(beta_tilde) (beta_tilde - beta).
struct AldsProblem {
    Eigen::VectorXd beta_tilde;
    Eigen::VectorXd score;       // U(beta_tilde)
    Eigen::MatrixXd sensitivity; // A(beta_tilde)
    Eigen::VectorXd lambdas;
    double mu = 1.0;
    std::vector<bool> unpenalized; // empty = every lambda_j must be > 0

    Eigen::Index dimension() const { return beta_tilde.size(); }
    bool is_unpenalized(Eigen::Index j) const {
        return !unpenalized.empty() && unpenalized[static_cast<std::size_t>(j)];
    }
    void validate() const;

    // lambda_j, or kUnpenalizedSlack for unpenalized coordinates.
    Eigen::VectorXd constraint_weights() const;
    Eigen::VectorXd delta(const Eigen::VectorXd& beta) const;
};

// Variables (beta, u); rows: Lambda beta <= u, -Lambda beta <= u,
// mu^-1 C^-1 Delta <= 1, -mu^-1 C^-1 Delta <= 1, where C = constraint_weights().
LinearProgram build_alds_lp(const AldsProblem& problem);

// Residuals of the primal/dual optimality system; each should be ~0 at a
// certified optimum.
struct KktReport {
    double primal_feasibility = 0.0; // (mu^-1 |C^-1 Delta(beta)|_inf - 1)_+
    double dual_feasibility = 0.0;   // (mu^-1 |gamma' C^-1 A Lambda^-1|_inf - 1)_+
    double primal_slackness = 0.0;   // |mu^-1 gamma' C^-1 A beta - ||Lambda beta||_1|
    double dual_slackness = 0.0;     // |mu^-1 gamma' C^-1 Delta(beta) - ||gamma||_1|

    double max() const;
};

KktReport verify_kkt(const AldsProblem& problem, const Eigen::VectorXd& beta_hat,
                     const Eigen::VectorXd& gamma_hat);

struct AldsOptions {
    LpOptions lp;
};

struct AldsSolution {
    Eigen::VectorXd beta;
    Eigen::VectorXd gamma;
    LpSolution lp;
    KktReport kkt;
};

// Solves the LP, reads gamma = alpha_3 - alpha_4 from its multipliers, and
// pulls beta strictly inside the constraint box when rounding left it just outside.
AldsSolution solve_alds(const AldsProblem& problem, const AldsOptions& opts = {});

AldsProblem make_alds_problem(const QuadratureScheme& scheme, const Eigen::VectorXd& lambdas,
                              const Eigen::VectorXd& beta_tilde);

// beta_tilde with U and A evaluated there; computed once and shared along a path.
struct AldsLinearization {
    Eigen::VectorXd beta_tilde;
    Eigen::VectorXd score;
    Eigen::MatrixXd sensitivity;
};

AldsLinearization linearize(const QuadratureScheme& scheme, const Eigen::VectorXd& beta_tilde);

// Problem over the coefficients with finite lambda; frozen ones sit at zero and
// their A beta_tilde contribution is folded into the score. kept receives the
// original indices.
AldsProblem restrict_problem(const AldsLinearization& lin, const PenaltyWeights& lambdas, double mu,
                             std::vector<Eigen::Index>& kept);

// Frozen coefficients (infinite lambda) are fixed at zero and their rows dropped.
FitResult fit_alds(const QuadratureScheme& scheme, const PenaltyWeights& lambdas,
                   const AldsLinearization& lin, const AldsOptions& opts = {});

// beta_tilde defaults to the MLE.
FitResult fit_alds(const QuadratureScheme& scheme, const PenaltyWeights& lambdas,
                   const std::optional<Eigen::VectorXd>& beta_tilde = std::nullopt,
                   const AldsOptions& opts = {});

} // namespace ppsel
