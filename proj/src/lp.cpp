#include "ppsel/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "ppsel/error.hpp"
#include "ppsel/io.hpp"

namespace ppsel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowKind { Inequality, Bound, Equality };

struct StdRow {
    RowKind kind;
    Eigen::Index source; // index into G / E rows, or original variable for bound rows
    double scale = 1.0;  // equilibration factor applied before the sign flip
    double sign = 1.0;   // -1 when the row was negated to make its rhs non-negative
    Eigen::Index slack = -1;
    Eigen::Index artificial = -1;
};

struct VarMap {
    double offset = 0.0;
    Eigen::Index col = -1;     // primary standard column
    double col_sign = 1.0;     // x = offset + col_sign * s
    Eigen::Index neg_col = -1; // second column for free variables (x = s+ - s-)
    Eigen::Index bound_row = -1;
};

// Standard form: min cs' s  s.t.  A s = b, s >= 0, b >= 0.
class Simplex {
public:
    Simplex(const LinearProgram& lp, const LpOptions& opts) : lp_(lp), opts_(opts) { build(); }

    LpSolution run();

private:
    void build();
    void load_tableau(const std::vector<Eigen::Index>& basis);
    void price(const Eigen::VectorXd& cost);
    // Returns false when optimal; throws on stall; sets unbounded_ when no leaving row.
    bool iterate(bool allow_artificial);
    void pivot(Eigen::Index row, Eigen::Index col);
    bool refine(const Eigen::VectorXd& cost);
    LpSolution extract() const;

    const LinearProgram& lp_;
    LpOptions opts_;
    std::vector<VarMap> vars_;
    std::vector<StdRow> rows_;
    Eigen::MatrixXd a_;
    Eigen::VectorXd b_;
    Eigen::VectorXd cost_;
    Eigen::VectorXd phase1_cost_;
    Eigen::Index n_struct_ = 0;
    Eigen::Index n_cols_ = 0;
    std::vector<bool> is_artificial_;

    Eigen::MatrixXd tab_; // rows x (cols + 1); last column is the basic solution
    Eigen::VectorXd red_; // reduced costs
    std::vector<Eigen::Index> basis_;
    std::vector<bool> in_basis_;
    bool unbounded_ = false;
    bool bland_ = false;
    bool used_bland_ = false;
    int degenerate_run_ = 0;
    int iterations_ = 0;
    int max_iterations_ = 0;
};

void Simplex::build() {
    const Eigen::Index n = lp_.num_vars();
    const bool has_lower = lp_.lower.size() == n;
    const bool has_upper = lp_.upper.size() == n;
    vars_.resize(static_cast<std::size_t>(n));
    Eigen::Index col = 0;
    std::vector<Eigen::Index> bounded_vars;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double l = has_lower ? lp_.lower[j] : -kInf;
        const double u = has_upper ? lp_.upper[j] : kInf;
        VarMap& v = vars_[static_cast<std::size_t>(j)];
        if (std::isfinite(l)) {
            v.offset = l;
            v.col = col++;
            if (std::isfinite(u)) bounded_vars.push_back(j);
        } else if (std::isfinite(u)) {
            v.offset = u;
            v.col = col++;
            v.col_sign = -1.0;
        } else {
            v.col = col++;
            v.neg_col = col++;
        }
    }
    n_struct_ = col;

    // Structural part of each row as a dense vector over standard columns.
    auto map_row = [&](const Eigen::Ref<const Eigen::RowVectorXd>& g, double rhs,
                       Eigen::RowVectorXd& out, double& out_rhs) {
        out = Eigen::RowVectorXd::Zero(n_struct_);
        out_rhs = rhs;
        for (Eigen::Index j = 0; j < n; ++j) {
            const VarMap& v = vars_[static_cast<std::size_t>(j)];
            const double gj = g[j];
            if (gj == 0.0) continue;
            out_rhs -= gj * v.offset;
            out[v.col] += gj * v.col_sign;
            if (v.neg_col >= 0) out[v.neg_col] -= gj;
        }
    };

    std::vector<Eigen::RowVectorXd> struct_rows;
    std::vector<double> rhs;
    for (Eigen::Index i = 0; i < lp_.num_inequalities(); ++i) {
        Eigen::RowVectorXd r;
        double bi;
        map_row(lp_.G.row(i), lp_.h[i], r, bi);
        rows_.push_back({RowKind::Inequality, i});
        struct_rows.push_back(std::move(r));
        rhs.push_back(bi);
    }
    for (Eigen::Index j : bounded_vars) {
        const VarMap& v = vars_[static_cast<std::size_t>(j)];
        Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n_struct_);
        r[v.col] = 1.0;
        rows_.push_back({RowKind::Bound, j});
        struct_rows.push_back(std::move(r));
        rhs.push_back(lp_.upper[j] - lp_.lower[j]);
        vars_[static_cast<std::size_t>(j)].bound_row = static_cast<Eigen::Index>(rows_.size()) - 1;
    }
    for (Eigen::Index i = 0; i < lp_.num_equalities(); ++i) {
        Eigen::RowVectorXd r;
        double bi;
        map_row(lp_.E.row(i), lp_.f[i], r, bi);
        rows_.push_back({RowKind::Equality, i});
        struct_rows.push_back(std::move(r));
        rhs.push_back(bi);
    }

    // Equilibrate and orient rows; allocate slack and artificial columns.
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        const double mx = n_struct_ > 0 ? struct_rows[r].cwiseAbs().maxCoeff() : 0.0;
        rows_[r].scale = mx > 0 ? 1.0 / mx : 1.0;
        struct_rows[r] *= rows_[r].scale;
        rhs[r] *= rows_[r].scale;
        if (rows_[r].kind != RowKind::Equality) rows_[r].slack = col++;
    }
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (rhs[r] < 0) {
            rows_[r].sign = -1.0;
            struct_rows[r] *= -1.0;
            rhs[r] = -rhs[r];
        }
        if (rows_[r].kind == RowKind::Equality || rows_[r].sign < 0) rows_[r].artificial = col++;
    }
    n_cols_ = col;

    const auto m = static_cast<Eigen::Index>(rows_.size());
    a_ = Eigen::MatrixXd::Zero(m, n_cols_);
    b_.resize(m);
    is_artificial_.assign(static_cast<std::size_t>(n_cols_), false);
    for (Eigen::Index r = 0; r < m; ++r) {
        const StdRow& row = rows_[static_cast<std::size_t>(r)];
        a_.row(r).head(n_struct_) = struct_rows[static_cast<std::size_t>(r)];
        if (row.slack >= 0) a_(r, row.slack) = row.sign;
        if (row.artificial >= 0) {
            a_(r, row.artificial) = 1.0;
            is_artificial_[static_cast<std::size_t>(row.artificial)] = true;
        }
        b_[r] = rhs[static_cast<std::size_t>(r)];
    }

    cost_ = Eigen::VectorXd::Zero(n_cols_);
    for (Eigen::Index j = 0; j < n; ++j) {
        const VarMap& v = vars_[static_cast<std::size_t>(j)];
        cost_[v.col] = lp_.c[j] * v.col_sign;
        if (v.neg_col >= 0) cost_[v.neg_col] = -lp_.c[j];
    }
    phase1_cost_ = Eigen::VectorXd::Zero(n_cols_);
    for (Eigen::Index k = 0; k < n_cols_; ++k)
        if (is_artificial_[static_cast<std::size_t>(k)]) phase1_cost_[k] = 1.0;

    max_iterations_ = 50 * static_cast<int>(m + n_cols_) + 1000;
}

void Simplex::load_tableau(const std::vector<Eigen::Index>& basis) {
    const auto m = static_cast<Eigen::Index>(rows_.size());
    basis_ = basis;
    in_basis_.assign(static_cast<std::size_t>(n_cols_), false);
    for (Eigen::Index k : basis_) in_basis_[static_cast<std::size_t>(k)] = true;
    tab_.resize(m, n_cols_ + 1);
    if (m == 0) return;
    Eigen::MatrixXd bmat(m, m);
    for (Eigen::Index r = 0; r < m; ++r) bmat.col(r) = a_.col(basis_[static_cast<std::size_t>(r)]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
    tab_.leftCols(n_cols_) = lu.solve(a_);
    tab_.col(n_cols_) = lu.solve(b_);
}

void Simplex::price(const Eigen::VectorXd& cost) {
    const auto m = static_cast<Eigen::Index>(rows_.size());
    Eigen::VectorXd cb(m);
    for (Eigen::Index r = 0; r < m; ++r) cb[r] = cost[basis_[static_cast<std::size_t>(r)]];
    red_ = cost;
    if (m > 0) red_.noalias() -= tab_.leftCols(n_cols_).transpose() * cb;
    for (Eigen::Index k : basis_) red_[k] = 0.0;
}

void Simplex::pivot(Eigen::Index row, Eigen::Index col) {
    const double pv = tab_(row, col);
    tab_.row(row) /= pv;
    for (Eigen::Index r = 0; r < tab_.rows(); ++r) {
        if (r == row) continue;
        const double f = tab_(r, col);
        if (f != 0.0) tab_.row(r).noalias() -= f * tab_.row(row);
    }
    const double fr = red_[col];
    if (fr != 0.0) red_.noalias() -= fr * tab_.row(row).head(n_cols_).transpose();
    in_basis_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(row)])] = false;
    basis_[static_cast<std::size_t>(row)] = col;
    in_basis_[static_cast<std::size_t>(col)] = true;
    red_[col] = 0.0;
    tab_(row, col) = 1.0;
}

bool Simplex::iterate(bool allow_artificial) {
    const auto m = tab_.rows();
    // Entering column.
    Eigen::Index enter = -1;
    double best = -opts_.optimality_tol;
    for (Eigen::Index k = 0; k < n_cols_; ++k) {
        if (in_basis_[static_cast<std::size_t>(k)]) continue;
        if (!allow_artificial && is_artificial_[static_cast<std::size_t>(k)]) continue;
        if (red_[k] < best) {
            enter = k;
            if (bland_) break;
            best = red_[k];
        }
    }
    if (enter < 0) return false;

    // Ratio test; ties go to the largest pivot (Dantzig) or smallest basis index (Bland).
    double min_ratio = kInf;
    for (Eigen::Index r = 0; r < m; ++r) {
        const double t = tab_(r, enter);
        if (t > opts_.pivot_tol) min_ratio = std::min(min_ratio, std::max(0.0, tab_(r, n_cols_)) / t);
    }
    if (!std::isfinite(min_ratio)) {
        unbounded_ = true;
        return false;
    }
    const double tie = min_ratio + 1e-12 * (1.0 + min_ratio);
    Eigen::Index leave = -1;
    for (Eigen::Index r = 0; r < m; ++r) {
        const double t = tab_(r, enter);
        if (t <= opts_.pivot_tol || std::max(0.0, tab_(r, n_cols_)) / t > tie) continue;
        if (leave < 0) {
            leave = r;
        } else if (bland_) {
            if (basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)]) leave = r;
        } else if (t > tab_(leave, enter)) {
            leave = r;
        }
    }

    const bool degenerate = min_ratio <= 1e-12;
    pivot(leave, enter);
    ++iterations_;
    if (iterations_ > max_iterations_)
        throw LpStallError("simplex stalled: iteration limit reached after Bland fallback");
    if (degenerate) {
        if (++degenerate_run_ > 5 * static_cast<int>(m + n_cols_)) {
            bland_ = true;
            used_bland_ = true;
        }
    } else {
        degenerate_run_ = 0;
        bland_ = false;
    }
    return true;
}

// Re-solves for the current basis from the original data and reports whether
// it is still primal feasible and dual optimal.
bool Simplex::refine(const Eigen::VectorXd& cost) {
    load_tableau(basis_);
    price(cost);
    for (Eigen::Index r = 0; r < tab_.rows(); ++r)
        if (tab_(r, n_cols_) < -opts_.feasibility_tol) return false;
    for (Eigen::Index k = 0; k < n_cols_; ++k)
        if (!in_basis_[static_cast<std::size_t>(k)] && !is_artificial_[static_cast<std::size_t>(k)] &&
            red_[k] < -opts_.optimality_tol)
            return false;
    return true;
}

LpSolution Simplex::run() {
    const auto m = static_cast<Eigen::Index>(rows_.size());
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
    for (Eigen::Index r = 0; r < m; ++r) {
        const StdRow& row = rows_[static_cast<std::size_t>(r)];
        basis[static_cast<std::size_t>(r)] = row.artificial >= 0 ? row.artificial : row.slack;
    }
    load_tableau(basis);

    LpSolution sol;
    // Phase 1.
    price(phase1_cost_);
    while (iterate(true)) {
    }
    double infeas = 0.0;
    for (Eigen::Index r = 0; r < m; ++r)
        if (is_artificial_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)])])
            infeas += std::max(0.0, tab_(r, n_cols_));
    if (infeas > opts_.feasibility_tol * (1.0 + (m > 0 ? b_.cwiseAbs().maxCoeff() : 0.0))) {
        sol.status = LpStatus::Infeasible;
        sol.iterations = iterations_;
        sol.used_bland = used_bland_;
        return sol;
    }
    // Drive remaining artificials out of the basis where possible; rows where
    // that fails are redundant and keep their artificial at zero.
    for (Eigen::Index r = 0; r < m; ++r) {
        if (!is_artificial_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)])]) continue;
        Eigen::Index best = -1;
        double mag = 1e-9;
        for (Eigen::Index k = 0; k < n_cols_; ++k) {
            if (in_basis_[static_cast<std::size_t>(k)] || is_artificial_[static_cast<std::size_t>(k)]) continue;
            if (std::abs(tab_(r, k)) > mag) {
                mag = std::abs(tab_(r, k));
                best = k;
            }
        }
        if (best >= 0) pivot(r, best);
    }

    // Phase 2 with periodic refactorization from the original data.
    bland_ = false;
    degenerate_run_ = 0;
    refine(cost_);
    for (int round = 0; round < 5; ++round) {
        unbounded_ = false;
        while (iterate(false)) {
        }
        if (unbounded_) break;
        if (refine(cost_)) break;
    }
    sol = extract();
    if (unbounded_) sol.status = LpStatus::Unbounded;
    return sol;
}

LpSolution Simplex::extract() const {
    const Eigen::Index n = lp_.num_vars();
    const auto m = static_cast<Eigen::Index>(rows_.size());
    LpSolution sol;
    sol.status = LpStatus::Optimal;
    sol.iterations = iterations_;
    sol.used_bland = used_bland_;

    Eigen::VectorXd s = Eigen::VectorXd::Zero(n_cols_);
    for (Eigen::Index r = 0; r < m; ++r) s[basis_[static_cast<std::size_t>(r)]] = tab_(r, n_cols_);
    sol.x.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const VarMap& v = vars_[static_cast<std::size_t>(j)];
        double xj = v.offset + v.col_sign * s[v.col];
        if (v.neg_col >= 0) xj -= s[v.neg_col];
        sol.x[j] = xj;
    }

    // Multipliers from reduced costs: for a row with slack column k,
    // multiplier = scale * reduced_cost[k] (zero when the slack is basic).
    sol.ineq_dual = Eigen::VectorXd::Zero(lp_.num_inequalities());
    sol.eq_dual = Eigen::VectorXd::Zero(lp_.num_equalities());
    sol.lower_dual = Eigen::VectorXd::Zero(n);
    sol.upper_dual = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    if (m > 0) {
        Eigen::MatrixXd bmat(m, m);
        Eigen::VectorXd cb(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            bmat.col(r) = a_.col(basis_[static_cast<std::size_t>(r)]);
            cb[r] = cost_[basis_[static_cast<std::size_t>(r)]];
        }
        y = bmat.transpose().partialPivLu().solve(cb);
    }
    for (Eigen::Index r = 0; r < m; ++r) {
        const StdRow& row = rows_[static_cast<std::size_t>(r)];
        const double mult = -y[r] * row.sign * row.scale;
        const bool slack_basic = row.slack >= 0 && in_basis_[static_cast<std::size_t>(row.slack)];
        switch (row.kind) {
        case RowKind::Inequality: sol.ineq_dual[row.source] = slack_basic ? 0.0 : mult; break;
        case RowKind::Bound: sol.upper_dual[row.source] = slack_basic ? 0.0 : mult; break;
        case RowKind::Equality: sol.eq_dual[row.source] = mult; break;
        }
    }
    Eigen::VectorXd red = cost_;
    if (m > 0) red.noalias() -= a_.transpose() * y;
    for (Eigen::Index k : basis_) red[k] = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const VarMap& v = vars_[static_cast<std::size_t>(j)];
        if (v.neg_col >= 0) continue;
        if (v.col_sign > 0)
            sol.lower_dual[j] = red[v.col];
        else
            sol.upper_dual[j] = red[v.col];
    }

    const bool has_lower = lp_.lower.size() == n;
    const bool has_upper = lp_.upper.size() == n;
    sol.primal_objective = lp_.c.dot(sol.x);
    double dual = 0.0;
    if (lp_.num_inequalities() > 0) dual -= lp_.h.dot(sol.ineq_dual);
    if (lp_.num_equalities() > 0) dual -= lp_.f.dot(sol.eq_dual);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (has_lower && std::isfinite(lp_.lower[j])) dual += lp_.lower[j] * sol.lower_dual[j];
        if (has_upper && std::isfinite(lp_.upper[j])) dual -= lp_.upper[j] * sol.upper_dual[j];
    }
    sol.dual_objective = dual;
    sol.gap = std::abs(sol.primal_objective - sol.dual_objective);

    double pres = 0.0;
    for (Eigen::Index r = 0; r < m; ++r) {
        const StdRow& row = rows_[static_cast<std::size_t>(r)];
        if (row.kind == RowKind::Inequality) {
            const double v = lp_.G.row(row.source).dot(sol.x) - lp_.h[row.source];
            pres = std::max(pres, std::max(0.0, v) * row.scale);
        } else if (row.kind == RowKind::Equality) {
            const double v = lp_.E.row(row.source).dot(sol.x) - lp_.f[row.source];
            pres = std::max(pres, std::abs(v) * row.scale);
        }
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        if (has_lower && std::isfinite(lp_.lower[j])) pres = std::max(pres, lp_.lower[j] - sol.x[j]);
        if (has_upper && std::isfinite(lp_.upper[j])) pres = std::max(pres, sol.x[j] - lp_.upper[j]);
    }
    sol.primal_residual = pres;

    Eigen::VectorXd stat = lp_.c - sol.lower_dual + sol.upper_dual;
    if (lp_.num_inequalities() > 0) stat.noalias() += lp_.G.transpose() * sol.ineq_dual;
    if (lp_.num_equalities() > 0) stat.noalias() += lp_.E.transpose() * sol.eq_dual;
    double dres = n > 0 ? stat.cwiseAbs().maxCoeff() / (1.0 + lp_.c.cwiseAbs().maxCoeff()) : 0.0;
    auto neg = [](const Eigen::VectorXd& v) { return v.size() ? std::max(0.0, -v.minCoeff()) : 0.0; };
    dres = std::max({dres, neg(sol.ineq_dual), neg(sol.lower_dual), neg(sol.upper_dual)});
    sol.dual_residual = dres;
    return sol;
}

} // namespace

std::string to_string(LpStatus s) {
    switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    }
    return "?";
}

void LinearProgram::validate() const {
    const Eigen::Index n = c.size();
    if (G.rows() > 0 && G.cols() != n) throw InputError("LP: G has the wrong number of columns");
    if (G.rows() != h.size()) throw InputError("LP: G and h disagree in row count");
    if (E.rows() > 0 && E.cols() != n) throw InputError("LP: E has the wrong number of columns");
    if (E.rows() != f.size()) throw InputError("LP: E and f disagree in row count");
    if (lower.size() != 0 && lower.size() != n) throw InputError("LP: lower bound length mismatch");
    if (upper.size() != 0 && upper.size() != n) throw InputError("LP: upper bound length mismatch");
    if (!c.allFinite() || !G.allFinite() || !h.allFinite() || !E.allFinite() || !f.allFinite())
        throw InputError("LP: coefficients must be finite");
    for (Eigen::Index j = 0; j < lower.size(); ++j)
        if (std::isnan(lower[j]) || lower[j] == kInf) throw InputError("LP: invalid lower bound");
    for (Eigen::Index j = 0; j < upper.size(); ++j)
        if (std::isnan(upper[j]) || upper[j] == -kInf) throw InputError("LP: invalid upper bound");
    if (lower.size() == n && upper.size() == n)
        for (Eigen::Index j = 0; j < n; ++j)
            if (lower[j] > upper[j]) throw InputError("LP: lower bound exceeds upper bound");
}

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opts) {
    lp.validate();
    Simplex simplex(lp, opts);
    return simplex.run();
}

void write_lp(const LinearProgram& lp, std::ostream& out) {
    out << "vars " << lp.num_vars() << " ineq " << lp.num_inequalities() << " eq "
        << lp.num_equalities() << '\n';
    out << "minimize";
    for (Eigen::Index j = 0; j < lp.num_vars(); ++j) out << ' ' << format_double(lp.c[j]);
    out << '\n';
    for (Eigen::Index i = 0; i < lp.num_inequalities(); ++i) {
        out << "le";
        for (Eigen::Index j = 0; j < lp.num_vars(); ++j) out << ' ' << format_double(lp.G(i, j));
        out << " | " << format_double(lp.h[i]) << '\n';
    }
    for (Eigen::Index i = 0; i < lp.num_equalities(); ++i) {
        out << "eq";
        for (Eigen::Index j = 0; j < lp.num_vars(); ++j) out << ' ' << format_double(lp.E(i, j));
        out << " | " << format_double(lp.f[i]) << '\n';
    }
    auto bound_line = [&](const char* tag, const Eigen::VectorXd& v) {
        if (v.size() == 0) return;
        out << tag;
        for (Eigen::Index j = 0; j < v.size(); ++j)
            out << ' ' << (std::isfinite(v[j]) ? format_double(v[j]) : (v[j] > 0 ? "inf" : "-inf"));
        out << '\n';
    };
    bound_line("lower", lp.lower);
    bound_line("upper", lp.upper);
}

} // namespace ppsel
