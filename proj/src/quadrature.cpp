#include "ppsel/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "ppsel/error.hpp"
#include "ppsel/io.hpp"

namespace ppsel {

GridSize default_grid(std::size_t n_data) {
    const auto side = static_cast<std::size_t>(std::ceil(2.0 * std::sqrt(static_cast<double>(n_data))));
    const std::size_t n = std::max<std::size_t>(10, side);
    return {n, n};
}

GridSize parse_quad(const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos) throw InputError("quadrature grid must look like NXxNY, got '" + text + "'");
    const double nx = parse_double(text.substr(0, x));
    const double ny = parse_double(text.substr(x + 1));
    if (!(nx >= 1 && ny >= 1) || nx != std::floor(nx) || ny != std::floor(ny) || nx > 1e6 || ny > 1e6)
        throw InputError("quadrature grid sizes must be positive integers, got '" + text + "'");
    return {static_cast<std::size_t>(nx), static_cast<std::size_t>(ny)};
}

ColumnStats weighted_column_stats(const Eigen::MatrixXd& design, const Eigen::VectorXd& weights,
                                  bool has_intercept) {
    const Eigen::Index p = design.cols();
    ColumnStats stats = ColumnStats::identity(static_cast<std::size_t>(p));
    const double total = weights.sum();
    for (Eigen::Index j = has_intercept ? 1 : 0; j < p; ++j) {
        const double mean = has_intercept ? weights.dot(design.col(j)) / total : 0.0;
        const double var =
            weights.dot((design.col(j).array() - mean).square().matrix()) / total;
        if (!(var > 0))
            throw InputError("design column " + std::to_string(j) +
                             " is constant over the quadrature points and cannot be standardized");
        stats.mean[j] = mean;
        stats.scale[j] = std::sqrt(var);
    }
    return stats;
}

QuadratureScheme build_scheme(const PointPattern& pattern, const ModelSpec& spec,
                              const FieldSet& fields, GridSize grid) {
    if (grid.nx < 1 || grid.ny < 1)
        throw InputError("quadrature grid needs at least one cell in each direction");
    const Window& w = pattern.window();
    for (const auto& f : fields)
        if (!f.covers(w)) throw InputError("raster '" + f.name() + "' does not cover the window");

    const DesignMap map(spec, fields);
    const std::size_t m = pattern.size();
    const std::size_t cells = grid.nx * grid.ny;
    const std::size_t total = m + cells;
    const double cw = w.width() / static_cast<double>(grid.nx);
    const double ch = w.height() / static_cast<double>(grid.ny);
    const double cell_area = w.area() / static_cast<double>(cells);

    auto cell_index = [&](Point u) {
        auto idx = [](double t, double origin, double step, std::size_t n) {
            const double f = std::floor((t - origin) / step);
            if (f < 0) return std::size_t{0};
            return std::min(static_cast<std::size_t>(f), n - 1);
        };
        return idx(u.y, w.y_min(), ch, grid.ny) * grid.nx + idx(u.x, w.x_min(), cw, grid.nx);
    };

    std::vector<std::size_t> counts(cells, 0);
    std::vector<std::size_t> data_cell(m);
    for (std::size_t i = 0; i < m; ++i) {
        data_cell[i] = cell_index(pattern.points()[i]);
        ++counts[data_cell[i]];
    }

    QuadratureScheme s;
    s.points.reserve(total);
    s.weights.resize(static_cast<Eigen::Index>(total));
    s.response.resize(static_cast<Eigen::Index>(total));
    s.is_data.assign(total, false);
    s.n_data = m;
    s.area = w.area();
    s.has_intercept = spec.include_intercept;
    s.column_names = spec.column_names();

    for (std::size_t i = 0; i < m; ++i) {
        const double wi = cell_area / static_cast<double>(1 + counts[data_cell[i]]);
        s.points.push_back(pattern.points()[i]);
        s.weights[static_cast<Eigen::Index>(i)] = wi;
        s.response[static_cast<Eigen::Index>(i)] = 1.0 / wi;
        s.is_data[i] = true;
    }
    for (std::size_t r = 0; r < grid.ny; ++r) {
        for (std::size_t c = 0; c < grid.nx; ++c) {
            const std::size_t k = r * grid.nx + c;
            const auto i = static_cast<Eigen::Index>(m + k);
            s.points.push_back({w.x_min() + (static_cast<double>(c) + 0.5) * cw,
                                w.y_min() + (static_cast<double>(r) + 0.5) * ch});
            s.weights[i] = cell_area / static_cast<double>(1 + counts[k]);
            s.response[i] = 0.0;
        }
    }

    const std::size_t p = map.dimension();
    // Column-major M x p; fill row by row through a scratch buffer.
    s.design.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(p));
    std::vector<double> row(p);
    for (std::size_t i = 0; i < total; ++i) {
        map.raw_row(s.points[i], row);
        for (std::size_t j = 0; j < p; ++j)
            s.design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }

    if (spec.standardize) {
        s.stats = weighted_column_stats(s.design, s.weights, s.has_intercept);
        for (Eigen::Index j = 0; j < s.design.cols(); ++j)
            s.design.col(j) = (s.design.col(j).array() - s.stats.mean[j]) / s.stats.scale[j];
    }
    return s;
}

QuadratureScheme make_scheme(Eigen::VectorXd weights, std::vector<bool> is_data,
                             Eigen::MatrixXd design, bool has_intercept) {
    const Eigen::Index n = weights.size();
    if (static_cast<Eigen::Index>(is_data.size()) != n || design.rows() != n)
        throw InputError("scheme arrays have inconsistent lengths");
    QuadratureScheme s;
    s.response = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(weights[i] > 0) || !std::isfinite(weights[i]))
            throw InputError("quadrature weights must be positive and finite");
        if (is_data[static_cast<std::size_t>(i)]) {
            s.response[i] = 1.0 / weights[i];
            ++s.n_data;
        }
    }
    s.area = weights.sum();
    s.weights = std::move(weights);
    s.is_data = std::move(is_data);
    s.design = std::move(design);
    s.has_intercept = has_intercept;
    for (Eigen::Index j = 0; j < s.design.cols(); ++j)
        s.column_names.push_back("z" + std::to_string(j + 1));
    return s;
}

double integral_approx(const QuadratureScheme& scheme, std::span<const double> f) {
    if (f.size() != static_cast<std::size_t>(scheme.weights.size()))
        throw InputError("integrand length does not match the number of quadrature points");
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += scheme.weights[static_cast<Eigen::Index>(i)] * f[i];
    return acc;
}

void write_scheme_csv(const QuadratureScheme& s, const std::filesystem::path& path) {
    CsvTable t;
    t.header = {"x", "y", "w", "y_response", "is_data"};
    for (const auto& n : s.column_names) t.header.push_back(n);
    const bool have_points = s.points.size() == static_cast<std::size_t>(s.weights.size());
    for (Eigen::Index i = 0; i < s.weights.size(); ++i) {
        std::vector<std::string> row;
        const auto k = static_cast<std::size_t>(i);
        row.push_back(have_points ? format_double(s.points[k].x) : "NA");
        row.push_back(have_points ? format_double(s.points[k].y) : "NA");
        row.push_back(format_double(s.weights[i]));
        row.push_back(format_double(s.response[i]));
        row.push_back(s.is_data[k] ? "1" : "0");
        for (Eigen::Index j = 0; j < s.design.cols(); ++j) row.push_back(format_double(s.design(i, j)));
        t.rows.push_back(std::move(row));
    }
    write_csv(t, path);
}

} // namespace ppsel
