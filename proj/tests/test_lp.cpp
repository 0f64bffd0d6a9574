#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "ppsel/lp.hpp"

using namespace ppsel;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct VertexResult {
    bool feasible = false;
    double best = kInf;
};

// Brute force: every basic solution from n tight rows, kept if feasible.
// Assumes finite bounds on every variable so the polytope is bounded.
VertexResult enumerate_vertices(const LinearProgram& lp) {
    const Eigen::Index n = lp.num_vars();
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    for (Eigen::Index i = 0; i < lp.G.rows(); ++i) {
        rows.push_back(lp.G.row(i).transpose());
        rhs.push_back(lp.h[i]);
    }
    for (Eigen::Index i = 0; i < lp.E.rows(); ++i) {
        rows.push_back(lp.E.row(i).transpose());
        rhs.push_back(lp.f[i]);
        rows.push_back(-lp.E.row(i).transpose());
        rhs.push_back(-lp.f[i]);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        rows.push_back(-Eigen::VectorXd::Unit(n, j));
        rhs.push_back(-lp.lower[j]);
        rows.push_back(Eigen::VectorXd::Unit(n, j));
        rhs.push_back(lp.upper[j]);
    }
    const std::size_t k = rows.size();
    VertexResult out;
    std::vector<std::size_t> pick(static_cast<std::size_t>(n));
    // iterate over n-subsets
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
        if (depth == static_cast<std::size_t>(n)) {
            Eigen::MatrixXd a(n, n);
            Eigen::VectorXd b(n);
            for (Eigen::Index r = 0; r < n; ++r) {
                a.row(r) = rows[pick[static_cast<std::size_t>(r)]].transpose();
                b[r] = rhs[pick[static_cast<std::size_t>(r)]];
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
            if (!lu.isInvertible()) return;
            const Eigen::VectorXd x = lu.solve(b);
            for (std::size_t r = 0; r < k; ++r)
                if (rows[r].dot(x) > rhs[r] + 1e-9) return;
            out.feasible = true;
            out.best = std::min(out.best, lp.c.dot(x));
            return;
        }
        for (std::size_t i = start; i < k; ++i) {
            pick[depth] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    return out;
}

LinearProgram random_lp(std::mt19937_64& rng, bool with_eq) {
    std::uniform_int_distribution<int> nv(1, 3), nr(1, 4), coef(-3, 3), rhs(-4, 6), box(1, 4);
    const int n = nv(rng), m = nr(rng);
    LinearProgram lp;
    lp.c.resize(n);
    for (int j = 0; j < n; ++j) lp.c[j] = coef(rng);
    lp.G.resize(m, n);
    lp.h.resize(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) lp.G(i, j) = coef(rng);
        lp.h[i] = rhs(rng);
    }
    if (with_eq) {
        lp.E.resize(1, n);
        for (int j = 0; j < n; ++j) lp.E(0, j) = coef(rng);
        lp.f = Eigen::VectorXd::Constant(1, rhs(rng));
    } else {
        lp.E.resize(0, n);
        lp.f.resize(0);
    }
    lp.lower.resize(n);
    lp.upper.resize(n);
    for (int j = 0; j < n; ++j) {
        lp.lower[j] = -box(rng);
        lp.upper[j] = box(rng);
    }
    return lp;
}

LinearProgram small_lp(Eigen::VectorXd c, Eigen::MatrixXd g, Eigen::VectorXd h) {
    LinearProgram lp;
    lp.c = std::move(c);
    lp.G = std::move(g);
    lp.h = std::move(h);
    lp.E.resize(0, lp.c.size());
    lp.f.resize(0);
    lp.lower = Eigen::VectorXd::Zero(lp.c.size());
    return lp;
}

void check_certificates(const LinearProgram& lp, const LpSolution& s) {
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.gap < 1e-8 * (1.0 + std::abs(s.primal_objective)));
    CHECK(s.primal_residual < 1e-9);
    CHECK(s.dual_residual < 1e-9);
    for (Eigen::Index i = 0; i < lp.G.rows(); ++i) {
        CHECK(s.ineq_dual[i] >= -1e-12);
        CHECK(std::abs(s.ineq_dual[i] * (lp.h[i] - lp.G.row(i).dot(s.x))) < 1e-8);
    }
    for (Eigen::Index j = 0; j < lp.num_vars(); ++j) {
        if (lp.lower.size() && std::isfinite(lp.lower[j]))
            CHECK(std::abs(s.lower_dual[j] * (s.x[j] - lp.lower[j])) < 1e-8);
        if (lp.upper.size() && std::isfinite(lp.upper[j]))
            CHECK(std::abs(s.upper_dual[j] * (lp.upper[j] - s.x[j])) < 1e-8);
    }
}

} // namespace

TEST_CASE("covering LP") {
    // min x1 + x2 s.t. x1 + x2 >= 1, x >= 0
    Eigen::MatrixXd g(1, 2);
    g << -1, -1;
    const auto lp = small_lp(Eigen::Vector2d(1, 1), g, Eigen::VectorXd::Constant(1, -1.0));
    const LpSolution s = solve_lp(lp);
    CHECK(s.primal_objective == doctest::Approx(1.0));
    CHECK(s.gap == doctest::Approx(0.0));
    check_certificates(lp, s);
}

TEST_CASE("infeasible and unbounded") {
    Eigen::MatrixXd g(1, 1);
    g << 1;
    const auto infeasible = small_lp(Eigen::VectorXd::Ones(1), g, Eigen::VectorXd::Constant(1, -1.0));
    CHECK(solve_lp(infeasible).status == LpStatus::Infeasible);

    const auto unbounded = small_lp(-Eigen::VectorXd::Ones(1), g * 0.0, Eigen::VectorXd::Zero(1));
    CHECK(solve_lp(unbounded).status == LpStatus::Unbounded);
}

TEST_CASE("free variables and equalities") {
    // min x1 + 2 x2 s.t. x1 + x2 = 1, x1 <= 0.25, x free otherwise
    LinearProgram lp;
    lp.c = Eigen::Vector2d(1, 2);
    lp.G = Eigen::MatrixXd(1, 2);
    lp.G << 1, 0;
    lp.h = Eigen::VectorXd::Constant(1, 0.25);
    lp.E = Eigen::MatrixXd(1, 2);
    lp.E << 1, 1;
    lp.f = Eigen::VectorXd::Ones(1);
    const LpSolution s = solve_lp(lp);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.x[0] == doctest::Approx(0.25));
    CHECK(s.x[1] == doctest::Approx(0.75));
    CHECK(s.primal_objective == doctest::Approx(1.75));
    check_certificates(lp, s);
}

TEST_CASE("random small LPs match vertex enumeration") {
    std::mt19937_64 rng(2024);
    int optimal = 0, infeasible = 0;
    for (int rep = 0; rep < 200; ++rep) {
        const LinearProgram lp = random_lp(rng, rep % 4 == 0);
        const VertexResult oracle = enumerate_vertices(lp);
        const LpSolution s = solve_lp(lp);
        if (!oracle.feasible) {
            CHECK(s.status == LpStatus::Infeasible);
            ++infeasible;
            continue;
        }
        REQUIRE(s.status == LpStatus::Optimal);
        CHECK(std::abs(s.primal_objective - oracle.best) < 1e-9);
        check_certificates(lp, s);
        ++optimal;
    }
    CHECK(optimal > 50);
    CHECK(infeasible > 5);
}

TEST_CASE("scaling the objective keeps the argmin") {
    std::mt19937_64 rng(77);
    for (int rep = 0; rep < 50; ++rep) {
        LinearProgram lp = random_lp(rng, false);
        const LpSolution a = solve_lp(lp);
        if (a.status != LpStatus::Optimal) continue;
        lp.c *= 8.0; // power of two keeps the arithmetic exact
        const LpSolution b = solve_lp(lp);
        REQUIRE(b.status == LpStatus::Optimal);
        CHECK((a.x - b.x).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("solve_lp is deterministic") {
    std::mt19937_64 rng(5);
    const LinearProgram lp = random_lp(rng, false);
    const LpSolution a = solve_lp(lp), b = solve_lp(lp);
    CHECK(a.status == b.status);
    CHECK(a.x == b.x);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("validation and dump") {
    LinearProgram lp;
    lp.c = Eigen::Vector2d(1, 1);
    lp.G = Eigen::MatrixXd::Zero(1, 3);
    lp.h = Eigen::VectorXd::Zero(1);
    CHECK_THROWS(lp.validate());
    lp.G = Eigen::MatrixXd::Ones(1, 2);
    lp.h[0] = std::nan("");
    CHECK_THROWS(lp.validate());
    lp.h[0] = 1.0;
    std::ostringstream os;
    write_lp(lp, os);
    CHECK(os.str().find("1") != std::string::npos);
}
