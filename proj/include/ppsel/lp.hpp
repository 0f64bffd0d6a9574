#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ppsel {

// minimize c'x  subject to  G x <= h,  E x = f,  lower <= x <= upper.
// Empty bound vectors mean free variables; infinite entries mean no bound.
struct LinearProgram {
    Eigen::VectorXd c;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;
    Eigen::MatrixXd E;
    Eigen::VectorXd f;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    Eigen::Index num_vars() const { return c.size(); }
    Eigen::Index num_inequalities() const { return G.rows(); }
    Eigen::Index num_equalities() const { return E.rows(); }

    void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

std::string to_string(LpStatus s);

// Multipliers follow the Lagrangian
//   c'x + ineq'(Gx - h) + eq'(Ex - f) - lower'(x - l) + upper'(x - u)
// with ineq, lower, upper >= 0.
struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    Eigen::VectorXd x;
    Eigen::VectorXd ineq_dual;
    Eigen::VectorXd eq_dual;
    Eigen::VectorXd lower_dual;
    Eigen::VectorXd upper_dual;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double gap = 0.0;
    double primal_residual = 0.0; // on row-equilibrated constraints
    double dual_residual = 0.0;   // stationarity relative to 1 + ||c||_inf, plus sign violations
    int iterations = 0;
    bool used_bland = false;
};

struct LpOptions {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-9;
};

class LpStallError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Two-phase primal simplex on a dense tableau with Dantzig pricing and a
// Bland fallback against cycling. Rows are equilibrated internally.
LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opts = {});

// Plain-text dump: dimensions, objective, then one line per constraint row.
void write_lp(const LinearProgram& lp, std::ostream& out);

} // namespace ppsel
