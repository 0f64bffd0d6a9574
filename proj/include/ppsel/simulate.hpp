#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ppsel/geometry.hpp"

namespace ppsel {

// Stream (seed, stream) -> std::mt19937_64 seeded with splitmix64 of both, so
// replicate r draws the same numbers no matter how replicates are scheduled.
struct RngSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    static constexpr const char* algorithm = "mt19937_64+splitmix64";
};

std::uint64_t splitmix64(std::uint64_t x);

// Distributions are implemented here rather than taken from <random> so the
// sample streams do not depend on the standard library vendor.
class Rng {
public:
    explicit Rng(RngSpec spec);

    double uniform();  // (0, 1), 53 bits
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    double normal();   // Marsaglia polar
    std::uint64_t poisson(double mean);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Log-linear intensity exp(z(u)' beta) on raw covariates, tabulated on the
// rectangles where every covariate is constant.
class IntensityTiles {
public:
    IntensityTiles(const Window& window, const ModelSpec& spec, const FieldSet& fields,
                   const Eigen::VectorXd& beta);

    const Window& window() const { return window_; }
    double max() const { return max_; }
    double integral() const { return integral_; }
    double at(Point u) const;  // u must lie in the window

    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& ys() const { return ys_; }
    // rho of tile (i, j) = [xs[i], xs[i+1]] x [ys[j], ys[j+1]]
    double tile(std::size_t i, std::size_t j) const { return rho_[j * (xs_.size() - 1) + i]; }

private:
    Window window_;
    std::vector<double> xs_, ys_, rho_;
    double max_ = 0.0;
    double integral_ = 0.0;
};

double max_intensity(const Window& window, const ModelSpec& spec, const FieldSet& fields,
                     const Eigen::VectorXd& beta);
double integrate_intensity(const Window& window, const ModelSpec& spec, const FieldSet& fields,
                           const Eigen::VectorXd& beta);

// Returns beta with the intercept set so that the integrated intensity equals mu.
Eigen::VectorXd tune_intercept(const Window& window, const ModelSpec& spec, const FieldSet& fields,
                               Eigen::VectorXd beta, double mu);

// Homogeneous proposal at rho_max thinned with probability rho(u) / rho_max.
PointPattern sim_poisson(const Window& window, const ModelSpec& spec, const FieldSet& fields,
                         const Eigen::VectorXd& beta, RngSpec rng);

struct ThomasParams {
    double kappa = 4e-4;      // parent intensity
    double gamma_disp = 15.0; // Gaussian dispersal standard deviation

    void validate() const;
};

// Parents on the window dilated by 4 gamma; each parent gets Poisson(rho_max/kappa)
// Gaussian-displaced offspring, kept inside the window with probability rho/rho_max.
PointPattern sim_thomas(const Window& window, const ModelSpec& spec, const FieldSet& fields,
                        const Eigen::VectorXd& beta, const ThomasParams& params, RngSpec rng);

} // namespace ppsel
