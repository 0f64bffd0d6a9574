#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ppsel/fit_result.hpp"
#include "ppsel/geometry.hpp"
#include "ppsel/quadrature.hpp"
#include "ppsel/simulate.hpp"
#include "ppsel/tuning.hpp"

namespace ppsel {

// n smooth fields "cov01".. on a 50 x 25 raster over the window: sums of random
// Gaussian bumps, standardized to mean 0 and unit variance over the cells.
FieldSet synthetic_covariates(std::size_t n, const Window& window, std::uint64_t seed);

// Same values, raster extent mapped affinely onto the window.
CovariateField rescale_field(const CovariateField& field, const Window& window);

// Intercept, all fields, then pairwise interactions (1,2), (1,3), ... until the
// model has p columns in total.
ModelSpec nested_model(const FieldSet& fields, std::size_t p, bool standardize);

// Percentages. Index sets are 0-based design columns; the intercept is ignored.
std::pair<double, double> tpr_fpr(const std::vector<std::size_t>& selected,
                                  const std::vector<std::size_t>& truth, std::size_t p,
                                  std::optional<std::size_t> intercept_index = 0);

// sqrt(sum_{j != intercept} mean_r (beta_hat_rj - beta_j)^2)
double rmse(const std::vector<Eigen::VectorXd>& estimates, const Eigen::VectorXd& truth,
            std::optional<std::size_t> intercept_index = 0);

enum class Process { Poisson, Thomas };

struct StudyConfig {
    Process process = Process::Poisson;
    ThomasParams thomas;
    Window window{0.0, 1000.0, 0.0, 500.0};
    double mu = 2400.0;
    std::size_t p = 21;                              // columns including the intercept
    std::map<std::size_t, double> truth{{1, 1.0}, {2, -1.0}}; // 0-based column -> value
    std::size_t n_replicates = 100;
    std::vector<Method> methods{Method::AL, Method::ALDS};
    double nu = 1.0;
    GridSpec grid;
    std::optional<GridSize> quad;
    std::uint64_t seed = 1;
    std::uint64_t covariate_seed = 2024;
    std::size_t n_covariates = 15;
    std::vector<std::filesystem::path> rasters; // overrides the synthetic set
    bool standardize = true;
    std::string label = "study";

    void validate() const;
};

// Flat "key = value" file; '#' starts a comment. Window may be D1, D2, D3 or
// "x_min x_max y_min y_max".
StudyConfig parse_study_config(std::istream& in, const std::string& source = "<stream>");
StudyConfig read_study_config(const std::filesystem::path& path);

struct ReplicateRecord {
    std::size_t replicate = 0;
    Method method = Method::AL;
    std::size_t n_points = 0;
    bool ok = false;
    std::string error;
    double lambda = 0.0;
    std::vector<std::size_t> support;
    Eigen::VectorXd beta; // original covariate scale
    double seconds = 0.0;
};

struct MethodSummary {
    Method method = Method::AL;
    double tpr = 0.0;
    double fpr = 0.0;
    double rmse = 0.0;
    double mean_seconds = 0.0;
    std::size_t n_ok = 0;
    std::size_t n_failed = 0;
};

struct StudyResult {
    std::string label;
    std::vector<MethodSummary> summaries;
    std::vector<ReplicateRecord> records; // replicate-major, methods in config order
};

// Aggregates records into per-method summaries (pure function of the records).
std::vector<MethodSummary> summarize(const std::vector<ReplicateRecord>& records,
                                     const std::vector<Method>& methods,
                                     const Eigen::VectorXd& truth, std::size_t p);

Eigen::VectorXd truth_vector(const StudyConfig& config);

// Fans replicates out to `threads` workers (0 = hardware concurrency). Output
// does not depend on the thread count. Throws if more than 10% of the
// replicates fail for some method.
StudyResult run_study(const StudyConfig& config, std::size_t threads = 0);

// One row: label, then TPR, FPR, RMSE[, Time], failed per method.
void write_study_csv(const StudyResult& result, std::ostream& out, bool timing = false);
void write_records_csv(const StudyResult& result, const std::vector<std::string>& names,
                       std::ostream& out, bool timing = false);

} // namespace ppsel
