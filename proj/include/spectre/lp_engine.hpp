#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "spectre/errors.hpp"

namespace spectre {

enum class Relation { le, eq, ge };
enum class Sense { minimize, maximize };

/// Dense linear program: objective sense + c, row constraints with a relation
/// each, and per-variable bounds where +-infinity is allowed.
struct LinearProgram {
    Sense sense = Sense::minimize;
    Eigen::VectorXd objective;       // length n
    Eigen::MatrixXd row_coeffs;      // R x n
    std::vector<Relation> relations; // R
    Eigen::VectorXd rhs;             // R
    Eigen::VectorXd lower;           // n, -inf allowed
    Eigen::VectorXd upper;           // n, +inf allowed

    static constexpr double inf = std::numeric_limits<double>::infinity();

    /// n variables, bounds default to [0, +inf).
    explicit LinearProgram(int n = 0, Sense s = Sense::minimize) { reset(n, s); }

    void reset(int n, Sense s) {
        sense = s;
        objective = Eigen::VectorXd::Zero(n);
        row_coeffs.resize(0, n);
        relations.clear();
        rhs.resize(0);
        lower = Eigen::VectorXd::Zero(n);
        upper = Eigen::VectorXd::Constant(n, inf);
    }

    int n_vars() const { return static_cast<int>(objective.size()); }
    int n_rows() const { return static_cast<int>(relations.size()); }

    void add_row(const Eigen::VectorXd& coeffs, Relation rel, double b) {
        if (coeffs.size() != objective.size())
            throw std::invalid_argument("LinearProgram::add_row: wrong coefficient length");
        row_coeffs.conservativeResize(row_coeffs.rows() + 1, Eigen::NoChange);
        row_coeffs.row(row_coeffs.rows() - 1) = coeffs.transpose();
        relations.push_back(rel);
        rhs.conservativeResize(rhs.size() + 1);
        rhs[rhs.size() - 1] = b;
    }

    void validate() const {
        if (row_coeffs.cols() != objective.size() || row_coeffs.rows() != rhs.size() ||
            static_cast<Eigen::Index>(relations.size()) != rhs.size())
            throw std::invalid_argument("LinearProgram: inconsistent shapes");
        for (int j = 0; j < n_vars(); ++j)
            if (lower[j] > upper[j]) throw std::invalid_argument("LinearProgram: lower > upper bound");
    }
};

enum class LpStatus { optimal, infeasible, unbounded };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        default: return "unbounded";
    }
}

struct LpSolution {
    LpStatus status = LpStatus::optimal;
    Eigen::VectorXd x;
    double objective_value = 0.0;
    double dual_gap = 0.0;            // |primal - dual| from the final basis certificate
    double dual_infeasibility = 0.0;  // largest violated reduced-cost at termination
    int iterations = 0;
};

namespace lp_detail {

constexpr double kFeasTol = 1e-8;
constexpr double kPivotTol = 1e-10;
constexpr double kOptTol = 1e-9;
constexpr int kBlandAfterDegenerate = 5000;

// Equality standard form min c.u, A u = b, u >= 0, plus the bookkeeping to
// map a solution back onto the original variables.
struct StandardForm {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    int n_structural = 0;  // columns excluding artificials
    int n_artificial = 0;
    // per original variable: mode 0 shift (x = lo + u), 1 flip (x = hi - u),
    // 2 split (x = u_pos - u_neg)
    struct VarMap {
        int mode;
        int col;
        int col2;
        double offset;
    };
    std::vector<VarMap> vars;
};

inline StandardForm standardize(const LinearProgram& lp) {
    const int n = lp.n_vars();
    const double inf = LinearProgram::inf;

    StandardForm sf;
    sf.vars.resize(n);
    int cols = 0;
    int extra_rows = 0;  // upper-bound rows for two-sided variables
    for (int j = 0; j < n; ++j) {
        const double lo = lp.lower[j], hi = lp.upper[j];
        if (lo > -inf) {
            sf.vars[j] = {0, cols++, -1, lo};
            if (hi < inf) ++extra_rows;
        } else if (hi < inf) {
            sf.vars[j] = {1, cols++, -1, hi};
        } else {
            sf.vars[j] = {2, cols, cols + 1, 0.0};
            cols += 2;
        }
    }

    const int base_rows = lp.n_rows();
    const int total_rows = base_rows + extra_rows;
    int n_slack = extra_rows;  // every bound row gets a slack
    for (auto rel : lp.relations)
        if (rel != Relation::eq) ++n_slack;

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(total_rows, cols + n_slack);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(total_rows);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(cols + n_slack);

    const double obj_sign = lp.sense == Sense::minimize ? 1.0 : -1.0;
    for (int j = 0; j < n; ++j) {
        const auto& vm = sf.vars[j];
        const double cj = obj_sign * lp.objective[j];
        if (vm.mode == 0) {
            c[vm.col] = cj;
        } else if (vm.mode == 1) {
            c[vm.col] = -cj;
        } else {
            c[vm.col] = cj;
            c[vm.col2] = -cj;
        }
    }

    std::vector<Relation> rels(total_rows);
    for (int r = 0; r < base_rows; ++r) {
        double shift = 0.0;
        for (int j = 0; j < n; ++j) {
            const double a = lp.row_coeffs(r, j);
            if (a == 0.0) continue;
            const auto& vm = sf.vars[j];
            if (vm.mode == 0) {
                A(r, vm.col) = a;
                shift += a * vm.offset;
            } else if (vm.mode == 1) {
                A(r, vm.col) = -a;
                shift += a * vm.offset;
            } else {
                A(r, vm.col) = a;
                A(r, vm.col2) = -a;
            }
        }
        b[r] = lp.rhs[r] - shift;
        rels[r] = lp.relations[r];
    }
    int r = base_rows;
    for (int j = 0; j < n; ++j) {
        const auto& vm = sf.vars[j];
        if (vm.mode == 0 && lp.upper[j] < inf) {
            A(r, vm.col) = 1.0;
            b[r] = lp.upper[j] - lp.lower[j];
            rels[r] = Relation::le;
            ++r;
        }
    }

    int slack = cols;
    for (int rr = 0; rr < total_rows; ++rr) {
        if (rels[rr] == Relation::le)
            A(rr, slack++) = 1.0;
        else if (rels[rr] == Relation::ge)
            A(rr, slack++) = -1.0;
    }
    for (int rr = 0; rr < total_rows; ++rr) {
        if (b[rr] < 0.0) {
            A.row(rr) = -A.row(rr);
            b[rr] = -b[rr];
        }
    }

    sf.A = std::move(A);
    sf.b = std::move(b);
    sf.c = std::move(c);
    sf.n_structural = cols + n_slack;
    return sf;
}

// Revised simplex with an explicit basis inverse, Dantzig pricing, and
// Bland's rule engaged after a run of degenerate pivots. All tie-breaking is
// by lowest index so identical inputs take identical pivot paths.
class RevisedSimplex {
public:
    RevisedSimplex(Eigen::MatrixXd A, Eigen::VectorXd b)
        : A_(std::move(A)), b_(std::move(b)), rows_(static_cast<int>(A_.rows())) {}

    // Adds one artificial column per row not coverable by a slack start and
    // solves Phase I. Returns false when infeasible.
    bool phase1() {
        const int cols = static_cast<int>(A_.cols());
        basis_.assign(rows_, -1);
        // A slack column with +1 in exactly this row can seed the basis.
        for (int j = 0; j < cols; ++j) {
            int pos = -1;
            bool unit = true;
            for (int r = 0; r < rows_ && unit; ++r) {
                const double v = A_(r, j);
                if (v == 1.0 && pos == -1)
                    pos = r;
                else if (v != 0.0)
                    unit = false;
            }
            if (unit && pos >= 0 && basis_[pos] == -1) basis_[pos] = j;
        }
        n_structural_ = cols;
        int n_art = 0;
        for (int r = 0; r < rows_; ++r)
            if (basis_[r] == -1) ++n_art;
        A_.conservativeResize(Eigen::NoChange, cols + n_art);
        A_.rightCols(n_art).setZero();
        int art = cols;
        for (int r = 0; r < rows_; ++r) {
            if (basis_[r] == -1) {
                A_(r, art) = 1.0;
                basis_[r] = art++;
            }
        }
        Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(A_.cols());
        phase1_cost.tail(n_art).setOnes();

        refactor();
        if (!run(phase1_cost, /*allow_artificial=*/true)) return false;  // unbounded impossible here
        const double infeas = phase1_cost.dot(current_x_full());
        const double scale = rows_ > 0 ? b_.lpNorm<Eigen::Infinity>() : 0.0;
        if (infeas > kFeasTol * std::max(1.0, scale)) return false;
        drive_out_artificials();
        return true;
    }

    // Phase II on the given cost vector. Returns false when unbounded.
    bool phase2(const Eigen::VectorXd& structural_cost) {
        Eigen::VectorXd cost = Eigen::VectorXd::Zero(A_.cols());
        cost.head(n_structural_) = structural_cost;
        cost_ = cost;
        return run(cost, /*allow_artificial=*/false);
    }

    Eigen::VectorXd solution() const {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(n_structural_);
        for (int r = 0; r < rows_; ++r)
            if (basis_[r] < n_structural_) u[basis_[r]] = xb_[r];
        return u;
    }

    int iterations() const { return iterations_; }

    // Certificate from the final basis: y = B^-T c_B. The dual objective
    // y.b must match the primal within tolerance, and no reduced cost may be
    // meaningfully negative at optimality.
    void certificate(double& gap, double& dual_infeas) const {
        const Eigen::VectorXd y = dual_y(cost_);
        const double dual_obj = y.dot(b_);
        double primal = 0.0;
        for (int r = 0; r < rows_; ++r) primal += cost_[basis_[r]] * xb_[r];
        gap = std::abs(primal - dual_obj);
        const Eigen::VectorXd d = cost_.head(n_structural_) -
                                  A_.leftCols(n_structural_).transpose() * y;
        dual_infeas = std::max(0.0, -d.minCoeff());
    }

private:
    Eigen::VectorXd dual_y(const Eigen::VectorXd& cost) const {
        Eigen::VectorXd cb(rows_);
        for (int r = 0; r < rows_; ++r) cb[r] = cost[basis_[r]];
        return binv_.transpose() * cb;
    }

    Eigen::VectorXd current_x_full() const {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(A_.cols());
        for (int r = 0; r < rows_; ++r) x[basis_[r]] = xb_[r];
        return x;
    }

    void refactor() {
        Eigen::MatrixXd B(rows_, rows_);
        for (int r = 0; r < rows_; ++r) B.col(r) = A_.col(basis_[r]);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
        if (!lu.isInvertible()) throw SolverError("simplex: singular basis during refactorization");
        binv_ = lu.inverse();
        xb_ = binv_ * b_;
        for (int r = 0; r < rows_; ++r)
            if (xb_[r] < 0.0 && xb_[r] > -kFeasTol) xb_[r] = 0.0;
    }

    bool run(const Eigen::VectorXd& cost, bool allow_artificial) {
        const int cols = static_cast<int>(A_.cols());
        const int enter_limit = allow_artificial ? cols : n_structural_;
        int degenerate = 0;
        bool bland = false;
        int since_refactor = 0;
        const int iter_cap = 2000 + 400 * (rows_ + cols);

        for (;; ++iterations_) {
            if (iterations_ > iter_cap) throw SolverError("simplex: iteration cap exceeded");
            if (++since_refactor >= 100) {
                refactor();
                since_refactor = 0;
            }
            const Eigen::VectorXd y = dual_y(cost);
            Eigen::VectorXd d = cost.head(enter_limit) - A_.leftCols(enter_limit).transpose() * y;
            for (int r = 0; r < rows_; ++r)
                if (basis_[r] < enter_limit) d[basis_[r]] = 0.0;

            int enter = -1;
            if (!bland) {
                double best = -kOptTol;
                for (int j = 0; j < enter_limit; ++j)
                    if (d[j] < best) {
                        best = d[j];
                        enter = j;
                    }
            } else {
                for (int j = 0; j < enter_limit; ++j)
                    if (d[j] < -kOptTol) {
                        enter = j;
                        break;
                    }
            }
            if (enter < 0) return true;  // optimal for this phase

            const Eigen::VectorXd w = binv_ * A_.col(enter);
            int leave = -1;
            double theta = std::numeric_limits<double>::infinity();
            for (int r = 0; r < rows_; ++r) {
                if (w[r] > kPivotTol) {
                    const double ratio = std::max(xb_[r], 0.0) / w[r];
                    const bool better =
                        ratio < theta - 1e-12 ||
                        (ratio < theta + 1e-12 &&
                         (leave < 0 ||
                          (bland ? basis_[r] < basis_[leave] : w[r] > w[leave] + 1e-12 ||
                           (std::abs(w[r] - w[leave]) <= 1e-12 && basis_[r] < basis_[leave]))));
                    if (better) {
                        theta = std::min(theta, ratio);
                        leave = r;
                    }
                }
            }
            if (leave < 0) return false;  // unbounded direction

            if (theta <= kFeasTol) {
                if (++degenerate > kBlandAfterDegenerate) bland = true;
            } else {
                degenerate = 0;
            }

            // basis change and product-form inverse update
            xb_ -= theta * w;
            xb_[leave] = theta;
            basis_[leave] = enter;
            const double piv = w[leave];
            binv_.row(leave) /= piv;
            for (int r = 0; r < rows_; ++r) {
                if (r == leave) continue;
                if (xb_[r] < 0.0 && xb_[r] > -1e-9) xb_[r] = 0.0;
                binv_.row(r) -= w[r] * binv_.row(leave);
            }
        }
    }

    // Replace basic artificials by structural columns where possible; rows
    // where no structural pivot exists are redundant and the artificial stays
    // pinned at zero.
    void drive_out_artificials() {
        refactor();
        for (int r = 0; r < rows_; ++r) {
            if (basis_[r] < n_structural_) continue;
            const Eigen::RowVectorXd row = binv_.row(r) * A_.leftCols(n_structural_);
            int enter = -1;
            for (int j = 0; j < n_structural_; ++j) {
                bool basic = false;
                for (int rr = 0; rr < rows_; ++rr)
                    if (basis_[rr] == j) {
                        basic = true;
                        break;
                    }
                if (!basic && std::abs(row[j]) > 1e-7) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) continue;
            const Eigen::VectorXd w = binv_ * A_.col(enter);
            basis_[r] = enter;
            const double piv = w[r];
            binv_.row(r) /= piv;
            for (int rr = 0; rr < rows_; ++rr)
                if (rr != r) binv_.row(rr) -= w[rr] * binv_.row(r);
            xb_ = binv_ * b_;
        }
        refactor();
    }

    Eigen::MatrixXd A_;
    Eigen::VectorXd b_;
    int rows_;
    int n_structural_ = 0;
    std::vector<int> basis_;
    Eigen::MatrixXd binv_;
    Eigen::VectorXd xb_;
    Eigen::VectorXd cost_;
    int iterations_ = 0;
};

}  // namespace lp_detail

/// Solve with a dense two-phase revised simplex. Infeasible and unbounded
/// outcomes are reported in the status, never thrown.
inline LpSolution solve_lp(const LinearProgram& lp) {
    lp.validate();
    auto sf = lp_detail::standardize(lp);

    LpSolution sol;
    if (sf.A.rows() == 0) {
        // unconstrained over u >= 0: zero is optimal unless a cost is negative
        if ((sf.c.array() < -lp_detail::kOptTol).any()) {
            sol.status = LpStatus::unbounded;
            return sol;
        }
        sol.x.resize(lp.n_vars());
        for (int j = 0; j < lp.n_vars(); ++j) {
            const auto& vm = sf.vars[j];
            sol.x[j] = vm.mode == 1 ? vm.offset : (vm.mode == 0 ? vm.offset : 0.0);
        }
        sol.objective_value = lp.objective.dot(sol.x);
        return sol;
    }
    lp_detail::RevisedSimplex simplex(sf.A, sf.b);
    if (!simplex.phase1()) {
        sol.status = LpStatus::infeasible;
        sol.iterations = simplex.iterations();
        return sol;
    }
    const double obj_sign = lp.sense == Sense::minimize ? 1.0 : -1.0;
    if (!simplex.phase2(sf.c)) {
        sol.status = LpStatus::unbounded;
        sol.iterations = simplex.iterations();
        return sol;
    }

    const Eigen::VectorXd u = simplex.solution();
    sol.x.resize(lp.n_vars());
    for (int j = 0; j < lp.n_vars(); ++j) {
        const auto& vm = sf.vars[j];
        if (vm.mode == 0)
            sol.x[j] = vm.offset + u[vm.col];
        else if (vm.mode == 1)
            sol.x[j] = vm.offset - u[vm.col];
        else
            sol.x[j] = u[vm.col] - u[vm.col2];
    }
    sol.objective_value = lp.objective.dot(sol.x);
    sol.iterations = simplex.iterations();
    simplex.certificate(sol.dual_gap, sol.dual_infeasibility);
    (void)obj_sign;
    return sol;
}

/// CPLEX-LP-format dump for external cross-checking.
inline std::string to_lp_format(const LinearProgram& lp) {
    std::ostringstream out;
    out.precision(17);
    auto term = [&](double a, int j, bool first) {
        if (a == 0.0) return false;
        if (a >= 0.0 && !first) out << " + ";
        if (a < 0.0) out << (first ? "-" : " - ");
        out << std::abs(a) << " x" << (j + 1);
        return true;
    };
    out << (lp.sense == Sense::minimize ? "Minimize" : "Maximize") << "\n obj:";
    bool any = false;
    for (int j = 0; j < lp.n_vars(); ++j) {
        out << "";
        if (term(lp.objective[j], j, !any)) any = true;
    }
    if (!any) out << " 0 x1";
    out << "\nSubject To\n";
    for (int r = 0; r < lp.n_rows(); ++r) {
        out << " c" << (r + 1) << ":";
        any = false;
        for (int j = 0; j < lp.n_vars(); ++j)
            if (term(lp.row_coeffs(r, j), j, !any)) any = true;
        if (!any) out << " 0 x1";
        switch (lp.relations[r]) {
            case Relation::le: out << " <= "; break;
            case Relation::eq: out << " = "; break;
            case Relation::ge: out << " >= "; break;
        }
        out << lp.rhs[r] << "\n";
    }
    out << "Bounds\n";
    for (int j = 0; j < lp.n_vars(); ++j) {
        const double lo = lp.lower[j], hi = lp.upper[j];
        out << " ";
        if (lo == -LinearProgram::inf)
            out << "-inf";
        else
            out << lo;
        out << " <= x" << (j + 1) << " <= ";
        if (hi == LinearProgram::inf)
            out << "+inf";
        else
            out << hi;
        out << "\n";
    }
    out << "End\n";
    return out.str();
}

/// First-order solver configuration. `seed` is reserved for randomized
/// variants; the default schedule is deterministic and ignores it.
struct SolverConfig {
    int max_iters = 20000;
    double step_constant = 0.1;
    int patience = 200;
    double tolerance = 1e-6;
    std::uint64_t seed = 1;

    void validate() const {
        if (max_iters <= 0 || step_constant <= 0.0 || patience <= 0 || tolerance <= 0.0)
            throw std::invalid_argument("SolverConfig: all fields must be positive");
    }
};

struct NonsmoothResult {
    Eigen::VectorXd x;
    double value = 0.0;
    std::vector<double> trace;  // best objective so far, one entry per iteration
    int iterations = 0;
    double final_step = 0.0;
    std::string stop_reason;    // "stalled" | "max_iters"
    bool budget_exhausted = false;
};

/// Objective handle: returns f(x); when grad != nullptr also writes one
/// subgradient of f at x into it.
using NonsmoothFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

/// Subgradient descent for convex nonsmooth objectives, dual-averaging form:
/// within a stage of length L the iterate is
///   x_t = x_stage - (c * sqrt(t) / |gbar_t|) * gbar_t,
/// where gbar_t is the running mean of the subgradients seen this stage, so
/// the distance from the stage start follows c/sqrt(t) schedules (total
/// travel <= c sqrt(L)) and c is the stage's travel scale in x-space.
/// Averaging the subgradients rather than stepping along the newest one is
/// what keeps piecewise-linear objectives from zigzagging between pieces.
/// Stages restart from the incumbent with Polyak-style running-average
/// iterate tracking, and the scale adapts geometrically: it doubles while the
/// best point keeps landing near the travel horizon (the optimum is out of
/// reach) and halves once progress localizes. Returns the best point seen
/// (raw or averaged). Deterministic.
inline NonsmoothResult minimize_nonsmooth(const NonsmoothFn& f, int dim, const SolverConfig& cfg,
                                          const Eigen::VectorXd* x0 = nullptr) {
    cfg.validate();
    if (dim <= 0) throw std::invalid_argument("minimize_nonsmooth: dim must be positive");

    constexpr int kAvgEvalEvery = 25;
    const int stage_len = std::max(64, cfg.max_iters / 32);

    Eigen::VectorXd x = x0 ? *x0 : Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd grad(dim), avg = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd gsum = Eigen::VectorXd::Zero(dim);
    long avg_count = 0;

    NonsmoothResult res;
    res.trace.reserve(static_cast<std::size_t>(cfg.max_iters));
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x = x;

    double c = cfg.step_constant;
    double c_peak = c;
    Eigen::VectorXd stage_start = x;
    int t_local = 0;
    double step = 0.0;
    bool stopped = false;
    for (int t = 1; t <= cfg.max_iters && !stopped; ++t) {
        const double fx = f(x, &grad);
        if (!std::isfinite(fx)) throw SolverError("minimize_nonsmooth: non-finite objective");
        if (fx < best) {
            best = fx;
            best_x = x;
        }
        ++avg_count;
        avg += (x - avg) / static_cast<double>(avg_count);
        if (avg_count % kAvgEvalEvery == 0) {
            const double fa = f(avg, nullptr);
            if (fa < best) {
                best = fa;
                best_x = avg;
            }
        }
        res.trace.push_back(best);
        res.iterations = t;

        // A flat window only counts as a stall once the travel scale has
        // entered refinement (several halvings below peak) and the window
        // spans a few stages; a flat stretch while c is near its peak just
        // means the optimum is not yet in reach.
        const int window = std::max(cfg.patience, 3 * stage_len);
        if (t > window && res.trace[t - 1] > res.trace[t - 1 - window] - cfg.tolerance &&
            c <= c_peak / 64.0) {
            res.stop_reason = "stalled";
            stopped = true;
            break;
        }

        ++t_local;
        gsum += grad;
        const Eigen::VectorXd dir = gsum / static_cast<double>(t_local);
        const double dnorm = std::max(dir.norm(), 1e-12);
        step = c * std::sqrt(static_cast<double>(t_local)) / dnorm;
        x = stage_start - step * dir;
        if (t_local >= stage_len) {
            // grow while the incumbent keeps landing near the travel horizon
            const double travel = (best_x - stage_start).norm();
            const double horizon = c * std::sqrt(static_cast<double>(stage_len));
            c = travel > 0.25 * horizon ? c * 2.0 : c * 0.5;
            c_peak = std::max(c_peak, c);
            t_local = 0;
            x = best_x;
            stage_start = best_x;
            avg.setZero();
            avg_count = 0;
            gsum.setZero();
        }
    }
    if (res.stop_reason.empty()) {
        res.stop_reason = "max_iters";
        res.budget_exhausted = true;
    }
    res.x = best_x;
    res.value = best;
    res.final_step = step;
    return res;
}

/// Exact epigraph reformulation of the minimax training objective for a
/// block-structured mapping: with mu split into nonnegative parts and nu the
/// epigraph of the worst per-instance term,
///   min  lambda.(mu+ + mu-) - tau.(mu+ - mu-) + nu
///   s.t. nu >= 1 + (sum_{y in C} phi(x_i, y).(mu+ - mu-) - 1)/|C|
/// over every training instance i and non-empty label subset C. The optimum
/// equals the minimum of the nonsmooth objective. Oracle-scale only.
inline LinearProgram mrc_lp_reformulation(const Eigen::MatrixXd& phi_matrix,
                                          const Eigen::VectorXd& tau, const Eigen::VectorXd& lambda,
                                          const Eigen::VectorXi& labels, int n_classes) {
    const int m = static_cast<int>(phi_matrix.cols());
    const auto n = phi_matrix.rows();
    if (m > 400) throw std::invalid_argument("mrc_lp_reformulation: m too large for the LP oracle (limit 400)");
    if (tau.size() != m || lambda.size() != m)
        throw std::invalid_argument("mrc_lp_reformulation: tau/lambda size mismatch");
    if (labels.size() != n) throw std::invalid_argument("mrc_lp_reformulation: label count mismatch");
    if (n_classes < 2 || n_classes > 10 || m % n_classes != 0)
        throw std::invalid_argument("mrc_lp_reformulation: bad class count");
    const int bd = m / n_classes;

    // variables: mu+ (m), mu- (m), nu (free)
    LinearProgram lp(2 * m + 1, Sense::minimize);
    lp.objective.segment(0, m) = lambda - tau;
    lp.objective.segment(m, m) = lambda + tau;
    lp.objective[2 * m] = 1.0;
    lp.lower[2 * m] = -LinearProgram::inf;

    const int n_subsets = (1 << n_classes) - 1;
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(n) * n_subsets, 2 * m + 1);
    Eigen::VectorXd rhs(rows.rows());
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::RowVectorXd base = phi_matrix.row(i).segment(
            static_cast<Eigen::Index>(labels[i]) * bd, bd);
        for (int mask = 1; mask <= n_subsets; ++mask, ++r) {
            rows.row(r).setZero();
            const int size = __builtin_popcount(static_cast<unsigned>(mask));
            const double w = 1.0 / size;
            for (int y = 0; y < n_classes; ++y) {
                if (!(mask & (1 << y))) continue;
                rows.row(r).segment(static_cast<Eigen::Index>(y) * bd, bd) = w * base;
                rows.row(r).segment(m + static_cast<Eigen::Index>(y) * bd, bd) = -w * base;
            }
            rows(r, 2 * m) = -1.0;
            rhs[r] = w - 1.0;  // nu >= 1 + (S_C - 1)/|C|
        }
    }
    lp.row_coeffs = std::move(rows);
    lp.rhs = std::move(rhs);
    lp.relations.assign(static_cast<std::size_t>(lp.rhs.size()), Relation::le);
    return lp;
}

}  // namespace spectre
