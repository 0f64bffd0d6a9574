#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ppsel/error.hpp"
#include "ppsel/quadrature.hpp"
#include "test_util.hpp"

using namespace ppsel;

namespace {

ModelSpec intercept_only() { return ModelSpec{}; }

// Counting weights recomputed by brute force over every cell.
std::vector<double> brute_weights(const PointPattern& pat, GridSize g, const std::vector<Point>& pts) {
    const Window& w = pat.window();
    const double cw = w.width() / static_cast<double>(g.nx), ch = w.height() / static_cast<double>(g.ny);
    auto cell = [&](Point u) {
        auto ix = std::min<std::size_t>(g.nx - 1, static_cast<std::size_t>((u.x - w.x_min()) / cw));
        auto iy = std::min<std::size_t>(g.ny - 1, static_cast<std::size_t>((u.y - w.y_min()) / ch));
        return iy * g.nx + ix;
    };
    std::vector<double> out;
    for (Point u : pts) {
        std::size_t count = 0;
        for (Point d : pat.points())
            if (cell(d) == cell(u)) ++count;
        out.push_back(cw * ch / (1.0 + static_cast<double>(count)));
    }
    return out;
}

} // namespace

TEST_CASE("empty pattern gives equal dummy weights") {
    PointPattern pat(Window(0, 1, 0, 1), {});
    const QuadratureScheme s = build_scheme(pat, intercept_only(), {}, {2, 2});
    CHECK(s.size() == 4);
    CHECK(s.n_data == 0);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(s.weights[i] == 0.25);
    CHECK(s.points[0] == Point{0.25, 0.25});
    CHECK(s.points[3] == Point{0.75, 0.75});
}

TEST_CASE("one data point shares its cell weight") {
    PointPattern pat(Window(0, 1, 0, 1), {{0.1, 0.2}});
    const QuadratureScheme s = build_scheme(pat, intercept_only(), {}, {2, 2});
    REQUIRE(s.size() == 5);
    CHECK(s.is_data[0]);
    CHECK(s.weights[0] == 0.125);
    CHECK(s.weights[1] == 0.125); // dummy of the same (south-west) cell
    CHECK(s.weights[2] == 0.25);
    CHECK(s.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.response[0] * s.weights[0] == 1.0);
    CHECK(s.response[1] == 0.0);
}

TEST_CASE("three data points in a single cell") {
    PointPattern pat(Window(0, 1, 0, 1), {{0.1, 0.2}, {0.9, 0.9}, {0.5, 0.5}});
    const QuadratureScheme s = build_scheme(pat, intercept_only(), {}, {1, 1});
    REQUIRE(s.size() == 4);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(s.weights[i] == 0.25);
}

TEST_CASE("weights match the brute-force counting rule and sum to the area") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 30; ++rep) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const Window w(-2.0, 3.0 + u(rng), 1.0, 2.5 + u(rng));
        std::vector<Point> pts;
        const int m = static_cast<int>(u(rng) * 40);
        for (int k = 0; k < m; ++k)
            pts.push_back({w.x_min() + u(rng) * w.width(), w.y_min() + u(rng) * w.height()});
        PointPattern pat(w, pts);
        const GridSize g{1 + static_cast<std::size_t>(u(rng) * 9), 1 + static_cast<std::size_t>(u(rng) * 9)};
        const QuadratureScheme s = build_scheme(pat, intercept_only(), {}, g);
        CHECK(s.size() == pts.size() + g.nx * g.ny);
        CHECK(std::abs(s.weights.sum() - w.area()) <= 1e-10 * w.area());
        CHECK(s.weights.minCoeff() > 0);
        const auto expect = brute_weights(pat, g, s.points);
        for (std::size_t i = 0; i < s.size(); ++i)
            CHECK(s.weights[static_cast<Eigen::Index>(i)] == doctest::Approx(expect[i]).epsilon(1e-12));
        std::size_t ones = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double yw = s.response[static_cast<Eigen::Index>(i)] * s.weights[static_cast<Eigen::Index>(i)];
            CHECK((yw == 0.0 || std::abs(yw - 1.0) < 1e-15));
            if (yw != 0.0) ++ones;
        }
        CHECK(ones == pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) CHECK(s.points[i] == pts[i]);
    }
}

TEST_CASE("scheme is invariant to data ordering up to reordering") {
    Window w(0, 1, 0, 1);
    std::vector<Point> pts{{0.1, 0.1}, {0.15, 0.12}, {0.8, 0.3}, {0.5, 0.9}};
    auto rev = pts;
    std::reverse(rev.begin(), rev.end());
    const auto a = build_scheme(PointPattern(w, pts), intercept_only(), {}, {3, 3});
    const auto b = build_scheme(PointPattern(w, rev), intercept_only(), {}, {3, 3});
    for (std::size_t i = 0; i < pts.size(); ++i)
        CHECK(a.weights[static_cast<Eigen::Index>(i)] == b.weights[static_cast<Eigen::Index>(pts.size() - 1 - i)]);
    CHECK(a.weights.tail(9) == b.weights.tail(9));
}

TEST_CASE("integral_approx") {
    PointPattern pat(Window(0, 2, 0, 1), {{0.3, 0.3}, {1.7, 0.2}});
    const QuadratureScheme s = build_scheme(pat, intercept_only(), {}, {4, 2});
    std::vector<double> one(s.size(), 1.0), three(s.size(), 3.0);
    CHECK(integral_approx(s, one) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(integral_approx(s, three) == doctest::Approx(6.0).epsilon(1e-14));
    std::vector<double> wrong(s.size() + 1, 1.0);
    CHECK_THROWS_AS(integral_approx(s, wrong), InputError);
}

TEST_CASE("integral_approx is exact for raster-aligned piecewise-constant intensity") {
    Window w(0, 4, 0, 2);
    CovariateField a("a", 2, 4, 0, 0, 1, 1, {0.1, -0.4, 0.7, 0.2, 1.3, -1.0, 0.0, 0.5});
    ModelSpec spec;
    spec.covariates = {"a"};
    PointPattern pat(w, {{0.2, 0.2}, {3.5, 1.5}, {3.6, 1.6}});
    const Eigen::Vector2d beta(0.3, 1.1);
    double exact = 0.0;
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 4; ++c) exact += std::exp(beta[0] + beta[1] * a.at(r, c));
    for (GridSize g : {GridSize{4, 2}, GridSize{8, 4}, GridSize{12, 6}}) {
        const QuadratureScheme s = build_scheme(pat, spec, {a}, g);
        std::vector<double> f(s.size());
        for (std::size_t i = 0; i < s.size(); ++i)
            f[i] = std::exp(s.design.row(static_cast<Eigen::Index>(i)).dot(beta));
        CHECK(std::abs(integral_approx(s, f) - exact) < 1e-9);
    }
}

TEST_CASE("scheme errors") {
    Window w(0, 1, 0, 1);
    CovariateField small("a", 1, 1, 0, 0, 0.5, 0.5, {1.0});
    ModelSpec spec;
    spec.covariates = {"a"};
    CHECK_THROWS_AS(build_scheme(PointPattern(w, {}), spec, {small}, {2, 2}), InputError);
    CHECK_THROWS_AS(build_scheme(PointPattern(w, {}), intercept_only(), {}, {0, 2}), InputError);
    CHECK(default_grid(0).nx == 10);
    CHECK(default_grid(2400).nx == 98);
    CHECK(parse_quad("40x20").nx == 40);
    CHECK(parse_quad("40x20").ny == 20);
    CHECK_THROWS_AS(parse_quad("40"), InputError);
    CHECK_THROWS_AS(parse_quad("0x3"), InputError);
}
