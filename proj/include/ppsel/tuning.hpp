#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ppsel/al_solver.hpp"
#include "ppsel/alds_solver.hpp"
#include "ppsel/fit_result.hpp"
#include "ppsel/quadrature.hpp"

namespace ppsel {

// lambda_j = lambda |beta_tilde_j|^-nu; +inf where beta_tilde_j = 0 (frozen),
// 0 for the intercept. lambda = 0 gives all zeros.
PenaltyWeights adaptive_weights(const Eigen::VectorXd& beta_tilde, double nu, double lambda,
                                bool has_intercept);

// -2 loglik(beta_hat) + |support| log m.
double bic(const FitResult& fit, const QuadratureScheme& scheme);

// Smallest scalar lambda at which every penalized AL coefficient is zero,
// from the KKT threshold at the intercept-only model.
double lambda_max(const QuadratureScheme& scheme, const Eigen::VectorXd& beta_tilde, double nu);

// Relative BIC difference below which two path points are treated as tied.
inline constexpr double kBicTieTol = 1e-9;

struct GridSpec {
    std::size_t n = 50;
    double ratio = 1e-4;         // smallest / largest
    std::vector<double> values;  // explicit grid (strictly decreasing) overrides n/ratio

    // "N", "N:ratio" or a comma list "l1,l2,...".
    static GridSpec parse(const std::string& text);
};

std::vector<double> make_grid(const GridSpec& spec, double lmax);

struct LambdaPath {
    std::vector<double> grid;
    std::vector<std::optional<FitResult>> fits;
    std::vector<double> bic;           // NaN where the fit failed
    std::vector<std::string> errors;   // empty where the fit succeeded
    std::size_t selected = 0;
    Eigen::VectorXd beta_tilde;

    const FitResult& best() const { return *fits[selected]; }
    std::size_t n_failed() const;
};

struct TuningOptions {
    AlOptions al;
    AldsOptions alds;
};

// beta_tilde = MLE computed once; AL uses warm starts down the grid, ALDS
// shares the linearization at beta_tilde. Ties in BIC go to the larger lambda.
LambdaPath select_lambda(const QuadratureScheme& scheme, Method method, double nu,
                         const GridSpec& grid = {}, const TuningOptions& opts = {});

// Same, with a precomputed pilot estimate.
LambdaPath select_lambda(const QuadratureScheme& scheme, Method method, double nu,
                         const Eigen::VectorXd& beta_tilde, const GridSpec& grid,
                         const TuningOptions& opts = {});

// Columns: lambda, bic, p_star, then one column per coefficient.
void write_path_csv(const LambdaPath& path, const std::vector<std::string>& names,
                    std::ostream& out);
void write_path_csv(const LambdaPath& path, const std::vector<std::string>& names,
                    const std::filesystem::path& file);

} // namespace ppsel
