#include "ppsel/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ppsel/error.hpp"

namespace ppsel {

namespace {

// Relative slack used when deciding whether a raster extent covers a window
// edge; absorbs rounding in x0 + n * dx.
constexpr double kExtentSlack = 1e-9;

bool finite(double v) { return std::isfinite(v); }

} // namespace

Window::Window(double x_min, double x_max, double y_min, double y_max)
    : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
    if (!finite(x_min) || !finite(x_max) || !finite(y_min) || !finite(y_max))
        throw InputError("window bounds must be finite");
    if (!(x_max > x_min) || !(y_max > y_min))
        throw InputError("window must have x_max > x_min and y_max > y_min");
}

Window Window::dilated(double r) const {
    return Window(x_min_ - r, x_max_ + r, y_min_ - r, y_max_ + r);
}

PointPattern::PointPattern(Window window, std::vector<Point> points)
    : window_(window), points_(std::move(points)) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const Point& u = points_[i];
        if (!finite(u.x) || !finite(u.y) || !window_.contains(u)) {
            std::ostringstream msg;
            msg << "point " << i << " (" << u.x << ", " << u.y << ") lies outside the window";
            throw InputError(msg.str());
        }
    }
}

CovariateField::CovariateField(std::string name, std::size_t n_rows, std::size_t n_cols,
                               double x0, double y0, double dx, double dy,
                               std::vector<double> values)
    : name_(std::move(name)), n_rows_(n_rows), n_cols_(n_cols), x0_(x0), y0_(y0), dx_(dx),
      dy_(dy), values_(std::move(values)) {
    if (n_rows_ == 0 || n_cols_ == 0)
        throw InputError("raster '" + name_ + "' must have at least one row and column");
    if (!(dx_ > 0) || !(dy_ > 0) || !finite(dx_) || !finite(dy_))
        throw InputError("raster '" + name_ + "' cell sizes must be positive");
    if (!finite(x0_) || !finite(y0_))
        throw InputError("raster '" + name_ + "' origin must be finite");
    if (values_.size() != n_rows_ * n_cols_)
        throw InputError("raster '" + name_ + "' has wrong number of values");
    for (double v : values_)
        if (!finite(v)) throw InputError("raster '" + name_ + "' contains a non-finite value");
}

bool CovariateField::covers(const Window& w) const {
    const double sx = kExtentSlack * std::max(1.0, std::abs(x_end()) + std::abs(x0_));
    const double sy = kExtentSlack * std::max(1.0, std::abs(y_end()) + std::abs(y0_));
    return x0_ <= w.x_min() + sx && x_end() >= w.x_max() - sx && y0_ <= w.y_min() + sy &&
           y_end() >= w.y_max() - sy;
}

std::pair<std::size_t, std::size_t> CovariateField::cell_of(Point u) const {
    const double sx = kExtentSlack * std::max(1.0, std::abs(x_end()) + std::abs(x0_));
    const double sy = kExtentSlack * std::max(1.0, std::abs(y_end()) + std::abs(y0_));
    if (!(u.x >= x0_ - sx && u.x <= x_end() + sx && u.y >= y0_ - sy && u.y <= y_end() + sy)) {
        std::ostringstream msg;
        msg << "location (" << u.x << ", " << u.y << ") is outside raster '" << name_ << "'";
        throw InputError(msg.str());
    }
    auto index = [](double t, double origin, double step, std::size_t n) {
        const double f = std::floor((t - origin) / step);
        if (f < 0) return std::size_t{0};
        return std::min(static_cast<std::size_t>(f), n - 1);
    };
    return {index(u.y, y0_, dy_, n_rows_), index(u.x, x0_, dx_, n_cols_)};
}

std::vector<std::string> ModelSpec::column_names() const {
    std::vector<std::string> names;
    names.reserve(dimension());
    if (include_intercept) names.emplace_back("(Intercept)");
    for (const auto& c : covariates) names.push_back(c);
    for (const auto& [a, b] : interactions) names.push_back(a + ":" + b);
    return names;
}

ColumnStats ColumnStats::identity(std::size_t p) {
    const auto n = static_cast<Eigen::Index>(p);
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)};
}

DesignMap::DesignMap(const ModelSpec& spec, const FieldSet& fields)
    : fields_(&fields), intercept_(spec.include_intercept), dim_(spec.dimension()) {
    auto find = [&](const std::string& name) {
        for (std::size_t k = 0; k < fields.size(); ++k)
            if (fields[k].name() == name) return k;
        throw InputError("covariate '" + name + "' is not among the supplied rasters");
    };
    for (const auto& c : spec.covariates) columns_.push_back({find(c), std::nullopt});
    for (const auto& [a, b] : spec.interactions) columns_.push_back({find(a), find(b)});
}

void DesignMap::raw_row(Point u, std::span<double> out) const {
    std::size_t j = 0;
    if (intercept_) out[j++] = 1.0;
    const FieldSet& f = *fields_;
    for (const Column& col : columns_) {
        double v = f[col.a].lookup(u);
        if (col.b) v *= f[*col.b].lookup(u);
        out[j++] = v;
    }
}

std::pair<std::vector<double>, std::vector<double>> DesignMap::breakpoints(const Window& w) const {
    std::vector<double> xs{w.x_min(), w.x_max()};
    std::vector<double> ys{w.y_min(), w.y_max()};
    std::vector<bool> used(fields_->size(), false);
    for (const Column& col : columns_) {
        used[col.a] = true;
        if (col.b) used[*col.b] = true;
    }
    for (std::size_t k = 0; k < fields_->size(); ++k) {
        if (!used[k]) continue;
        const CovariateField& f = (*fields_)[k];
        for (std::size_t c = 1; c < f.n_cols(); ++c) {
            const double x = f.x0() + static_cast<double>(c) * f.dx();
            if (x > w.x_min() && x < w.x_max()) xs.push_back(x);
        }
        for (std::size_t r = 1; r < f.n_rows(); ++r) {
            const double y = f.y0() + static_cast<double>(r) * f.dy();
            if (y > w.y_min() && y < w.y_max()) ys.push_back(y);
        }
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    return {xs, ys};
}

Eigen::VectorXd design_row(Point u, const ModelSpec& spec, const FieldSet& fields,
                           const ColumnStats* stats) {
    DesignMap map(spec, fields);
    Eigen::VectorXd row(static_cast<Eigen::Index>(map.dimension()));
    map.raw_row(u, {row.data(), map.dimension()});
    if (stats && !stats->empty()) {
        if (stats->mean.size() != row.size())
            throw InputError("standardization statistics do not match the design dimension");
        row = (row - stats->mean).cwiseQuotient(stats->scale);
    }
    return row;
}

double intensity_at(Point u, const Eigen::VectorXd& beta, const ModelSpec& spec,
                    const FieldSet& fields, const ColumnStats* stats) {
    const Eigen::VectorXd z = design_row(u, spec, fields, stats);
    if (beta.size() != z.size()) throw InputError("coefficient vector has the wrong length");
    return std::exp(beta.dot(z));
}

Eigen::VectorXd to_original_scale(const Eigen::VectorXd& beta, const ColumnStats& stats,
                                  bool has_intercept) {
    if (stats.empty()) return beta;
    Eigen::VectorXd out = beta.cwiseQuotient(stats.scale);
    if (has_intercept) out[0] = beta[0] - out.tail(out.size() - 1).dot(stats.mean.tail(out.size() - 1));
    return out;
}

} // namespace ppsel
