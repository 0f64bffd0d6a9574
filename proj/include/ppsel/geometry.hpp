#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ppsel {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

// Closed axis-aligned rectangle.
class Window {
public:
    Window(double x_min, double x_max, double y_min, double y_max);

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    double y_min() const { return y_min_; }
    double y_max() const { return y_max_; }
    double width() const { return x_max_ - x_min_; }
    double height() const { return y_max_ - y_min_; }
    double area() const { return width() * height(); }

    bool contains(Point u) const {
        return u.x >= x_min_ && u.x <= x_max_ && u.y >= y_min_ && u.y <= y_max_;
    }

    Window dilated(double r) const;

    friend bool operator==(const Window&, const Window&) = default;

private:
    double x_min_, x_max_, y_min_, y_max_;
};

class PointPattern {
public:
    PointPattern(Window window, std::vector<Point> points);

    const Window& window() const { return window_; }
    const std::vector<Point>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }

    friend bool operator==(const PointPattern&, const PointPattern&) = default;

private:
    Window window_;
    std::vector<Point> points_;
};

// Piecewise-constant raster. Row 0 is the southernmost row; values are stored
// row-major.
class CovariateField {
public:
    CovariateField(std::string name, std::size_t n_rows, std::size_t n_cols, double x0, double y0,
                   double dx, double dy, std::vector<double> values);

    const std::string& name() const { return name_; }
    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return n_cols_; }
    double x0() const { return x0_; }
    double y0() const { return y0_; }
    double dx() const { return dx_; }
    double dy() const { return dy_; }
    double x_end() const { return x0_ + static_cast<double>(n_cols_) * dx_; }
    double y_end() const { return y0_ + static_cast<double>(n_rows_) * dy_; }
    const std::vector<double>& values() const { return values_; }

    double at(std::size_t row, std::size_t col) const { return values_[row * n_cols_ + col]; }

    bool covers(const Window& w) const;

    // (row, col) of the cell containing u; throws InputError outside the extent.
    std::pair<std::size_t, std::size_t> cell_of(Point u) const;

    double lookup(Point u) const {
        auto [r, c] = cell_of(u);
        return at(r, c);
    }

    friend bool operator==(const CovariateField&, const CovariateField&) = default;

private:
    std::string name_;
    std::size_t n_rows_, n_cols_;
    double x0_, y0_, dx_, dy_;
    std::vector<double> values_;
};

using FieldSet = std::vector<CovariateField>;

struct ModelSpec {
    std::vector<std::string> covariates;
    std::vector<std::pair<std::string, std::string>> interactions;
    bool include_intercept = true;
    bool standardize = false;

    std::size_t dimension() const {
        return (include_intercept ? 1 : 0) + covariates.size() + interactions.size();
    }

    std::vector<std::string> column_names() const;
};

// Per-column centering and scaling applied to the raw design. Identity for the
// intercept column.
struct ColumnStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static ColumnStats identity(std::size_t p);
    bool empty() const { return mean.size() == 0; }
};

struct Coefficients {
    Eigen::VectorXd beta;
    std::vector<std::string> names;

    std::size_t size() const { return static_cast<std::size_t>(beta.size()); }
};

// ModelSpec resolved against a FieldSet: column recipes point at fields by index.
class DesignMap {
public:
    DesignMap(const ModelSpec& spec, const FieldSet& fields);

    std::size_t dimension() const { return dim_; }
    bool has_intercept() const { return intercept_; }

    // Raw (unstandardized) row written into out.
    void raw_row(Point u, std::span<double> out) const;

    // Covariate-constant rectangles: union of all raster breakpoints clipped to w.
    std::pair<std::vector<double>, std::vector<double>> breakpoints(const Window& w) const;

private:
    struct Column {
        std::size_t a;
        std::optional<std::size_t> b;
    };

    const FieldSet* fields_;
    bool intercept_;
    std::size_t dim_;
    std::vector<Column> columns_;
};

Eigen::VectorXd design_row(Point u, const ModelSpec& spec, const FieldSet& fields,
                           const ColumnStats* stats = nullptr);

double intensity_at(Point u, const Eigen::VectorXd& beta, const ModelSpec& spec,
                    const FieldSet& fields, const ColumnStats* stats = nullptr);

// Maps coefficients fitted on a standardized design back to the raw covariate scale.
Eigen::VectorXd to_original_scale(const Eigen::VectorXd& beta, const ColumnStats& stats,
                                  bool has_intercept);

} // namespace ppsel
