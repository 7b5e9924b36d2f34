#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "spectre/dataset.hpp"
#include "spectre/lp_engine.hpp"
#include "spectre/mrc_core.hpp"
#include "spectre/spectral_map.hpp"

namespace spectre {

enum class Side { upper, lower };
enum class BoundStatus { optimal, infeasible, unbounded, degenerate };
enum class MomentSource { audit, full_train };

inline const char* to_string(BoundStatus s) {
    switch (s) {
        case BoundStatus::optimal: return "optimal";
        case BoundStatus::infeasible: return "infeasible";
        case BoundStatus::unbounded: return "unbounded";
        default: return "degenerate";
    }
}

/// Frozen-rule audit data: mapped rows phi(x_i, y_i), the rule's per-instance
/// loss, and group ids (all zero when sensitive data is unavailable, in which
/// case only overall bounds are meaningful).
struct AuditSet {
    std::vector<int> instances;  // row indices into the source dataset
    Eigen::MatrixXd phi_matrix;  // N x m
    Eigen::VectorXd losses;      // per-instance loss of the frozen rule
    Eigen::VectorXi groups;
    Eigen::VectorXi labels;

    Eigen::Index n() const { return phi_matrix.rows(); }

    void validate() const {
        if (n() < 1) throw std::invalid_argument("AuditSet: empty");
        if (losses.size() != n() || groups.size() != n() || labels.size() != n())
            throw std::invalid_argument("AuditSet: field length mismatch");
    }
};

struct SideOutcome {
    BoundStatus status = BoundStatus::optimal;
    double value = 0.0;
    Eigen::VectorXd weights;  // extremal distribution p over audit rows
    double z = 1.0;
};

/// One group's error band and the distributions attaining it.
struct GroupBound {
    int group = -1;  // -1 means overall
    double lower = 0.0;
    double upper = 1.0;
    Eigen::VectorXd extremal_upper_weights;
    Eigen::VectorXd extremal_lower_weights;
    BoundStatus upper_status = BoundStatus::optimal;
    BoundStatus lower_status = BoundStatus::optimal;
    int n_group = 0;
    bool low_confidence = false;  // fewer than 40 audit instances in the group
};

namespace guarantees_detail {

constexpr int kMinGroupSize = 40;
constexpr double kZGuard = 1e-12;

// Charnes-Cooper transformed program for one group: variables (q, z),
// objective c.q with c_i = loss_i * [group_i == g], subject to
//   z(tau - lambda) <= Phi^T q <= z(tau + lambda)
//   sum q = z,  e.q = 1,  0 <= q_i <= z,  z >= 0.
// The q_i <= z caps are implied by sum q = z with q >= 0, so by default they
// are presolved away; `literal_caps` keeps them for fidelity checks.
inline LinearProgram group_lp(const AuditSet& audit, const UncertaintySet& u, int group, Side side,
                              bool literal_caps = false) {
    const auto n = audit.n();
    const auto m = audit.phi_matrix.cols();
    LinearProgram lp(static_cast<int>(n) + 1,
                     side == Side::upper ? Sense::maximize : Sense::minimize);
    for (Eigen::Index i = 0; i < n; ++i)
        if (audit.groups[i] == group) lp.objective[i] = audit.losses[i];

    const auto rows = 2 * m + 2 + (literal_caps ? n : 0);
    lp.row_coeffs = Eigen::MatrixXd::Zero(rows, n + 1);
    lp.rhs = Eigen::VectorXd::Zero(rows);
    lp.relations.assign(static_cast<std::size_t>(rows), Relation::le);
    for (Eigen::Index j = 0; j < m; ++j) {
        lp.row_coeffs.row(2 * j).head(n) = audit.phi_matrix.col(j).transpose();
        lp.row_coeffs(2 * j, n) = -(u.tau[j] + u.lambda[j]);
        lp.relations[2 * j] = Relation::le;
        lp.row_coeffs.row(2 * j + 1).head(n) = audit.phi_matrix.col(j).transpose();
        lp.row_coeffs(2 * j + 1, n) = -(u.tau[j] - u.lambda[j]);
        lp.relations[2 * j + 1] = Relation::ge;
    }
    const auto r_sum = 2 * m;
    lp.row_coeffs.row(r_sum).head(n).setOnes();
    lp.row_coeffs(r_sum, n) = -1.0;
    lp.relations[r_sum] = Relation::eq;
    const auto r_e = 2 * m + 1;
    for (Eigen::Index i = 0; i < n; ++i)
        lp.row_coeffs(r_e, i) = audit.groups[i] == group ? 1.0 : 0.0;
    lp.relations[r_e] = Relation::eq;
    lp.rhs[r_e] = 1.0;
    if (literal_caps) {
        for (Eigen::Index i = 0; i < n; ++i) {
            lp.row_coeffs(2 * m + 2 + i, i) = 1.0;
            lp.row_coeffs(2 * m + 2 + i, n) = -1.0;
            lp.relations[2 * m + 2 + i] = Relation::le;
        }
    }
    return lp;
}

// The z = 1 overall-risk program: a simplex-constrained q inside the moment
// band, objective c = losses. The q_i <= 1 caps are implied by the simplex
// row and presolved away.
inline LinearProgram overall_lp(const AuditSet& audit, const UncertaintySet& u, Side side) {
    const auto n = audit.n();
    const auto m = audit.phi_matrix.cols();
    LinearProgram lp(static_cast<int>(n), side == Side::upper ? Sense::maximize : Sense::minimize);
    lp.objective = audit.losses;

    const auto rows = 2 * m + 1;
    lp.row_coeffs = Eigen::MatrixXd::Zero(rows, n);
    lp.rhs = Eigen::VectorXd::Zero(rows);
    lp.relations.assign(static_cast<std::size_t>(rows), Relation::le);
    for (Eigen::Index j = 0; j < m; ++j) {
        lp.row_coeffs.row(2 * j) = audit.phi_matrix.col(j).transpose();
        lp.rhs[2 * j] = u.tau[j] + u.lambda[j];
        lp.relations[2 * j] = Relation::le;
        lp.row_coeffs.row(2 * j + 1) = audit.phi_matrix.col(j).transpose();
        lp.rhs[2 * j + 1] = u.tau[j] - u.lambda[j];
        lp.relations[2 * j + 1] = Relation::ge;
    }
    lp.row_coeffs.row(2 * m).setOnes();
    lp.relations[2 * m] = Relation::eq;
    lp.rhs[2 * m] = 1.0;
    return lp;
}

}  // namespace guarantees_detail

/// One side of a group's error band; recovers p = q / z.
inline SideOutcome group_bound_side(const AuditSet& audit, const UncertaintySet& u, int group,
                                    Side side) {
    audit.validate();
    if (u.tau.size() != audit.phi_matrix.cols())
        throw std::invalid_argument("group_bound_side: uncertainty set does not match the audit map");
    if ((audit.groups.array() == group).count() == 0)
        throw std::invalid_argument("group_bound_side: group has no audit instances");

    const LinearProgram lp = guarantees_detail::group_lp(audit, u, group, side);
    const LpSolution sol = solve_lp(lp);
    SideOutcome out;
    if (sol.status == LpStatus::infeasible) {
        out.status = BoundStatus::infeasible;
        return out;
    }
    if (sol.status == LpStatus::unbounded) {
        out.status = BoundStatus::unbounded;
        return out;
    }
    const auto n = audit.n();
    out.z = sol.x[n];
    if (out.z < guarantees_detail::kZGuard) {
        out.status = BoundStatus::degenerate;
        return out;
    }
    out.weights = sol.x.head(n) / out.z;
    out.value = sol.objective_value;
    return out;
}

/// One side of the overall-risk band (no sensitive data needed; z fixed to 1).
inline SideOutcome overall_bound_side(const AuditSet& audit, const UncertaintySet& u, Side side) {
    audit.validate();
    if (u.tau.size() != audit.phi_matrix.cols())
        throw std::invalid_argument("overall_bound_side: uncertainty set does not match the audit map");
    const LinearProgram lp = guarantees_detail::overall_lp(audit, u, side);
    const LpSolution sol = solve_lp(lp);
    SideOutcome out;
    if (sol.status == LpStatus::infeasible) {
        out.status = BoundStatus::infeasible;
        return out;
    }
    if (sol.status == LpStatus::unbounded) {
        out.status = BoundStatus::unbounded;
        return out;
    }
    out.weights = sol.x;
    out.value = sol.objective_value;
    return out;
}

inline GroupBound group_bounds(const AuditSet& audit, const UncertaintySet& u, int group) {
    GroupBound b;
    b.group = group;
    b.n_group = static_cast<int>((audit.groups.array() == group).count());
    b.low_confidence = b.n_group < guarantees_detail::kMinGroupSize;
    const SideOutcome up = group_bound_side(audit, u, group, Side::upper);
    const SideOutcome lo = group_bound_side(audit, u, group, Side::lower);
    b.upper_status = up.status;
    b.lower_status = lo.status;
    if (up.status == BoundStatus::optimal) {
        b.upper = up.value;
        b.extremal_upper_weights = up.weights;
    }
    if (lo.status == BoundStatus::optimal) {
        b.lower = lo.value;
        b.extremal_lower_weights = lo.weights;
    }
    return b;
}

inline GroupBound overall_bounds(const AuditSet& audit, const UncertaintySet& u) {
    GroupBound b;
    b.group = -1;
    b.n_group = static_cast<int>(audit.n());
    b.low_confidence = false;
    const SideOutcome up = overall_bound_side(audit, u, Side::upper);
    const SideOutcome lo = overall_bound_side(audit, u, Side::lower);
    b.upper_status = up.status;
    b.lower_status = lo.status;
    if (up.status == BoundStatus::optimal) {
        b.upper = up.value;
        b.extremal_upper_weights = up.weights;
    }
    if (lo.status == BoundStatus::optimal) {
        b.lower = lo.value;
        b.extremal_lower_weights = lo.weights;
    }
    return b;
}

/// Group-stratified audit subsample (plain subsample without groups), seeded
/// and deterministic. Every non-empty group keeps at least one instance when
/// the budget allows.
inline std::vector<int> audit_indices(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("audit_indices: fraction must be in (0,1]");
    const int n = static_cast<int>(ds.n());
    const int total = std::max(1, static_cast<int>(std::llround(fraction * n)));
    std::vector<std::vector<int>> buckets;
    if (ds.sensitive) {
        buckets.resize(static_cast<std::size_t>(ds.n_groups()));
        for (int i = 0; i < n; ++i) buckets[(*ds.sensitive)[i]].push_back(i);
    } else {
        buckets.resize(1);
        for (int i = 0; i < n; ++i) buckets[0].push_back(i);
    }
    Rng rng(seed);
    for (auto& b : buckets) rng.shuffle(b);
    auto counts = detail::proportional_counts(buckets, total);
    for (std::size_t g = 0; g < buckets.size(); ++g) {
        if (counts[g] == 0 && !buckets[g].empty()) {
            // steal one slot from the largest allocation
            std::size_t donor = 0;
            for (std::size_t h = 1; h < counts.size(); ++h)
                if (counts[h] > counts[donor]) donor = h;
            if (counts[donor] > 1) {
                --counts[donor];
                counts[g] = 1;
            }
        }
    }
    std::vector<int> idx;
    for (std::size_t g = 0; g < buckets.size(); ++g)
        for (int r = 0; r < counts[g]; ++r) idx.push_back(buckets[g][r]);
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Assemble the audit rows under a (possibly reduced) bounds map, with the
/// frozen rule's losses supplied by the caller.
inline AuditSet build_audit(const Dataset& ds, const std::vector<int>& indices,
                            const SpectralMap& bounds_map, const Eigen::VectorXd& losses) {
    if (losses.size() != static_cast<Eigen::Index>(indices.size()))
        throw std::invalid_argument("build_audit: loss count mismatch");
    AuditSet audit;
    audit.instances = indices;
    const auto n = static_cast<Eigen::Index>(indices.size());
    const int bd = bounds_map.base_dim();
    audit.phi_matrix = Eigen::MatrixXd::Zero(n, bounds_map.output_dim());
    audit.losses = losses;
    audit.groups = Eigen::VectorXi::Zero(n);
    audit.labels.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const int i = indices[r];
        const int y = ds.labels[i];
        audit.phi_matrix.row(r).segment(static_cast<Eigen::Index>(y) * bd, bd) =
            bounds_map.base_features(Eigen::VectorXd(ds.features.row(i))).transpose();
        audit.labels[r] = y;
        if (ds.sensitive) audit.groups[r] = (*ds.sensitive)[i];
    }
    return audit;
}

/// tau and lambda for bound computation: either from the audit rows
/// themselves (always feasible: the audit empirical distribution sits at the
/// band center) or from the full training set's mapped matrix.
inline UncertaintySet bounds_uncertainty(const AuditSet& audit, double lambda0, MomentSource source,
                                         const Dataset* full_train = nullptr,
                                         const SpectralMap* bounds_map = nullptr) {
    if (source == MomentSource::audit) return build_uncertainty(audit.phi_matrix, lambda0);
    if (!full_train || !bounds_map)
        throw std::invalid_argument("bounds_uncertainty: full_train source needs the training data and map");
    return build_uncertainty(make_feature_batch(*bounds_map, *full_train), lambda0);
}

/// One row of a bound sweep table.
struct BoundCell {
    std::string param;
    double value = 0.0;
    int group = -1;  // -1 = overall
    double lower = 0.0;
    double upper = 1.0;
    std::string lower_status = "optimal";
    std::string upper_status = "optimal";
    int n_group = 0;
    bool low_confidence = false;
    bool ok = false;
    std::string error;
};

struct BoundsInput {
    const Dataset* audit_rows = nullptr;  // standardized rows, groups attached when available
    Eigen::VectorXd losses;               // frozen rule loss per audit row
    MomentSource source = MomentSource::audit;
    const Dataset* full_train = nullptr;  // only read for MomentSource::full_train
    bool has_groups = false;
};

/// Recompute per-group and overall bands for each grid value, rebuilding the
/// mapped matrix and uncertainty set per cell. `param` is "lambda0" (fixed
/// sigma) or "sigma" (fixed lambda0). Failed cells are marked and the sweep
/// continues. Rows are ordered by (grid value, overall-first group id).
inline std::vector<BoundCell> bound_sweep(const BoundsInput& input, int D, std::uint64_t map_seed,
                                          const std::string& param, const std::vector<double>& grid,
                                          double fixed_sigma, double fixed_lambda0) {
    if (grid.empty()) throw std::invalid_argument("bound_sweep: empty grid");
    if (param != "lambda0" && param != "sigma")
        throw std::invalid_argument("bound_sweep: param must be 'lambda0' or 'sigma'");
    const Dataset& ds = *input.audit_rows;
    std::vector<int> indices(ds.n());
    for (int i = 0; i < static_cast<int>(ds.n()); ++i) indices[i] = i;

    std::vector<int> group_ids;
    group_ids.push_back(-1);
    if (input.has_groups && ds.sensitive)
        for (int g = 0; g < ds.n_groups(); ++g)
            if ((ds.sensitive->array() == g).count() > 0) group_ids.push_back(g);

    std::vector<BoundCell> cells;
    for (double v : grid) {
        const double sigma = param == "sigma" ? v : fixed_sigma;
        const double lambda0 = param == "lambda0" ? v : fixed_lambda0;
        AuditSet audit;
        UncertaintySet u;
        bool setup_ok = true;
        std::string setup_error;
        try {
            const SpectralMap bmap = sample_map(static_cast<int>(ds.dim()), D, sigma,
                                                ds.n_classes(), map_seed);
            audit = build_audit(ds, indices, bmap, input.losses);
            u = bounds_uncertainty(audit, lambda0, input.source, input.full_train, &bmap);
        } catch (const std::exception& e) {
            setup_ok = false;
            setup_error = e.what();
        }
        for (int g : group_ids) {
            BoundCell cell;
            cell.param = param;
            cell.value = v;
            cell.group = g;
            if (!setup_ok) {
                cell.error = setup_error;
                cells.push_back(std::move(cell));
                continue;
            }
            try {
                const GroupBound b = g < 0 ? overall_bounds(audit, u) : group_bounds(audit, u, g);
                cell.lower = b.lower;
                cell.upper = b.upper;
                cell.lower_status = to_string(b.lower_status);
                cell.upper_status = to_string(b.upper_status);
                cell.n_group = b.n_group;
                cell.low_confidence = b.low_confidence;
                cell.ok = b.lower_status == BoundStatus::optimal && b.upper_status == BoundStatus::optimal;
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

/// Reweighting view of an extremal distribution: per-instance deltas from
/// uniform plus group and label marginals, ready for plotting.
struct ExtremalReport {
    Eigen::VectorXd deltas;
    std::map<int, double> group_marginals;
    std::map<int, double> label_marginals;
};

inline ExtremalReport extremal_report(const Eigen::VectorXd& weights, const AuditSet& audit) {
    if (weights.size() != audit.n())
        throw std::invalid_argument("extremal_report: weight count mismatch");
    ExtremalReport rep;
    const double uniform = 1.0 / static_cast<double>(audit.n());
    rep.deltas = weights.array() - uniform;
    for (Eigen::Index i = 0; i < audit.n(); ++i) {
        rep.group_marginals[audit.groups[i]] += weights[i];
        rep.label_marginals[audit.labels[i]] += weights[i];
    }
    return rep;
}

/// Audit over the expanded support {(x_i, y) : all labels y} with the
/// randomized rule's expected loss 1 - h(y|x_i) as the per-row cost. Together
/// with the training-time uncertainty set, the overall-risk upper bound of
/// this audit reproduces the trained model's worst-case risk.
inline AuditSet randomized_rule_audit(const Dataset& ds, const SpectralMap& map,
                                      const MrcModel& model) {
    AuditSet audit;
    const auto n = ds.n();
    const int k = map.n_classes;
    const int bd = map.base_dim();
    audit.phi_matrix = Eigen::MatrixXd::Zero(n * k, map.output_dim());
    audit.losses.resize(n * k);
    audit.groups = Eigen::VectorXi::Zero(n * k);
    audit.labels.resize(n * k);
    audit.instances.resize(static_cast<std::size_t>(n) * k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd x = ds.features.row(i);
        const Eigen::VectorXd base = map.base_features(x);
        const Eigen::VectorXd proba = predict_proba(model, x);
        for (int y = 0; y < k; ++y) {
            const auto r = i * k + y;
            audit.phi_matrix.row(r).segment(static_cast<Eigen::Index>(y) * bd, bd) = base.transpose();
            audit.losses[r] = 1.0 - proba[y];
            audit.labels[r] = y;
            audit.instances[static_cast<std::size_t>(r)] = static_cast<int>(i);
        }
    }
    return audit;
}

}  // namespace spectre
