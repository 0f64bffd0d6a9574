#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ppsel/geometry.hpp"

namespace ppsel {

enum class Method { MLE, AL, ALDS };

std::string to_string(Method m);
Method parse_method(const std::string& text);

// Coefficients with |beta_j| below this are stored as exactly zero.
inline constexpr double kHardZero = 1e-10;

struct FitResult {
    Method method = Method::MLE;
    Coefficients coef;
    std::vector<std::size_t> support;
    double objective = 0.0;
    int outer_iterations = 0;
    int inner_iterations = 0;
    double kkt_residual = 0.0;
    double lambda = 0.0;
    Eigen::VectorXd penalty; // per-coefficient lambda_j (empty for MLE)
    ColumnStats stats;       // standardization applied to the design
    bool clamped = false;    // linear predictor hit the overflow guard at the solution
};

// Zero out |beta_j| < kHardZero and return the support of what remains.
std::vector<std::size_t> apply_hard_zero(Eigen::VectorXd& beta);

} // namespace ppsel
