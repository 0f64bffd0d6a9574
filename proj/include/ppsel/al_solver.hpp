#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ppsel/fit_result.hpp"
#include "ppsel/quadrature.hpp"

namespace ppsel {

// Per-coefficient L1 weights. +infinity freezes a coefficient at zero.
struct PenaltyWeights {
    Eigen::VectorXd lambda;

    std::size_t size() const { return static_cast<std::size_t>(lambda.size()); }
    bool frozen(Eigen::Index j) const { return std::isinf(lambda[j]); }
    void validate(Eigen::Index p) const;
};

struct WorkingData {
    Eigen::VectorXd y_star;
    Eigen::VectorXd psi;
};

// IRLS working response and weights of the quadratic approximation at beta_check.
WorkingData irls_working_data(const QuadratureScheme& scheme, const Eigen::VectorXd& beta_check);

struct CdOptions {
    double tol = 1e-9;
    int max_iter = 100000; // coordinate cycles
};

struct CdResult {
    Eigen::VectorXd beta;
    int cycles = 0;
};

// Minimizes (1/(2 N)) sum_i psi_i (y*_i - z_i' beta)^2 + sum_j lambda_j |beta_j|
// by cyclic coordinate descent with an active-set phase.
CdResult cd_solve(const Eigen::VectorXd& y_star, const Eigen::VectorXd& psi,
                  const Eigen::MatrixXd& design, const PenaltyWeights& lambdas, double normalizer,
                  const Eigen::VectorXd& init, const CdOptions& opts = {});

// Same problem given the weighted Gram matrix Z' Psi Z and cross product Z' Psi y*.
CdResult cd_solve_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& cross,
                       const PenaltyWeights& lambdas, double normalizer, const Eigen::VectorXd& init,
                       const CdOptions& opts = {});

struct AlOptions {
    double tol_outer = 1e-7;
    double tol_inner = 1e-9;
    int max_outer = 100;
    double kkt_tol = 1e-7; // outer loop keeps going until the exact KKT residual is below this
};

// -loglik / m + sum_j lambda_j |beta_j| with the exact discretized likelihood.
double al_objective(const QuadratureScheme& scheme, const Eigen::VectorXd& beta,
                    const PenaltyWeights& lambdas);

// Largest violation of the adaptive-lasso subgradient conditions, scaled by m.
double al_kkt_residual(const QuadratureScheme& scheme, const Eigen::VectorXd& beta,
                       const PenaltyWeights& lambdas);

// IRLS outer loop around coordinate descent. init defaults to the MLE.
FitResult fit_al(const QuadratureScheme& scheme, const PenaltyWeights& lambdas,
                 const std::optional<Eigen::VectorXd>& init = std::nullopt,
                 const AlOptions& opts = {});

} // namespace ppsel
