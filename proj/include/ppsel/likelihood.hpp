#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ppsel/fit_result.hpp"
#include "ppsel/quadrature.hpp"

namespace ppsel {

// Linear predictors are clamped to +-kEtaClamp before exponentiation.
inline constexpr double kEtaClamp = 700.0;

// rho_i(beta) for every quadrature point, tagged with the beta it was computed at.
class LikelihoodWorkspace {
public:
    explicit LikelihoodWorkspace(const QuadratureScheme& scheme) : scheme_(&scheme) {}

    // Recomputes only when beta differs from the cached tag.
    const Eigen::VectorXd& rho(const Eigen::VectorXd& beta);
    const Eigen::VectorXd& eta(const Eigen::VectorXd& beta);
    bool clamped() const { return clamped_; }

    double loglik(const Eigen::VectorXd& beta);
    Eigen::VectorXd score(const Eigen::VectorXd& beta);
    Eigen::MatrixXd sensitivity(const Eigen::VectorXd& beta);

private:
    void update(const Eigen::VectorXd& beta);

    const QuadratureScheme* scheme_;
    Eigen::VectorXd tag_;
    Eigen::VectorXd eta_;
    Eigen::VectorXd rho_;
    bool valid_ = false;
    bool clamped_ = false;
};

double loglik(const QuadratureScheme& scheme, const Eigen::VectorXd& beta);
Eigen::VectorXd score(const QuadratureScheme& scheme, const Eigen::VectorXd& beta);
Eigen::MatrixXd sensitivity(const QuadratureScheme& scheme, const Eigen::VectorXd& beta);

struct MleOptions {
    double tol = 1e-8; // on ||score||_inf / M
    int max_iter = 50;
};

// Newton-Raphson with step halving. When free is non-empty only coefficients
// with free[j] are optimized; the rest stay at their init value.
FitResult mle(const QuadratureScheme& scheme, const Eigen::VectorXd& init, const MleOptions& opts = {},
              const std::vector<bool>& free = {});
FitResult mle(const QuadratureScheme& scheme, const MleOptions& opts = {});

// Solves sym * x = rhs by LDLT; throws RankDeficientError on a (near) singular matrix.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& sym, const Eigen::VectorXd& rhs);

} // namespace ppsel
