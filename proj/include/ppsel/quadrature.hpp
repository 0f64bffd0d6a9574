#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ppsel/geometry.hpp"

namespace ppsel {

struct GridSize {
    std::size_t nx = 0;
    std::size_t ny = 0;
};

// max(10, ceil(2 sqrt(m))) cells per side.
GridSize default_grid(std::size_t n_data);

// "NXxNY", e.g. "40x20".
GridSize parse_quad(const std::string& text);

// Berman-Turner pseudo-data. Data points come first (input order), then one
// dummy point per grid cell centre (row-major from the south-west corner).
struct QuadratureScheme {
    std::vector<Point> points;
    Eigen::VectorXd weights;
    Eigen::VectorXd response; // 1/w for data points, 0 for dummies
    std::vector<bool> is_data;
    Eigen::MatrixXd design; // M x p, standardized when stats is non-empty
    std::size_t n_data = 0;
    double area = 0.0;
    bool has_intercept = true;
    std::vector<std::string> column_names;
    ColumnStats stats;

    std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
    std::size_t dimension() const { return static_cast<std::size_t>(design.cols()); }
};

QuadratureScheme build_scheme(const PointPattern& pattern, const ModelSpec& spec,
                              const FieldSet& fields, GridSize grid);

// Scheme from explicit pseudo-data; points may be left empty. Validates
// positivity of weights and dimensions. area defaults to sum of weights.
QuadratureScheme make_scheme(Eigen::VectorXd weights, std::vector<bool> is_data,
                             Eigen::MatrixXd design, bool has_intercept = true);

double integral_approx(const QuadratureScheme& scheme, std::span<const double> f);

// Weighted column statistics over the scheme (intercept column left as identity).
ColumnStats weighted_column_stats(const Eigen::MatrixXd& design, const Eigen::VectorXd& weights,
                                  bool has_intercept);

// Columns: x, y, w, y_response, is_data, then one column per design column.
void write_scheme_csv(const QuadratureScheme& scheme, const std::filesystem::path& path);

} // namespace ppsel
