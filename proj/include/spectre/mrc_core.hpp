#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "spectre/dataset.hpp"
#include "spectre/lp_engine.hpp"
#include "spectre/spectral_map.hpp"

namespace spectre {

/// Moment-band uncertainty set: all distributions whose feature-map
/// expectation stays within lambda of the empirical mean tau, with
/// lambda = lambda0 * sqrt(var(phi) / n) so higher-variance components get
/// looser constraints. `phi_matrix` is retained when the set is built from a
/// dense matrix; block-form construction leaves it empty.
struct UncertaintySet {
    Eigen::VectorXd tau;
    Eigen::VectorXd lambda;
    double lambda0 = 0.0;
    Eigen::Index n = 0;
    Eigen::MatrixXd phi_matrix;
};

inline UncertaintySet build_uncertainty(const Eigen::MatrixXd& phi_matrix, double lambda0) {
    if (phi_matrix.rows() < 2)
        throw std::invalid_argument("build_uncertainty: need at least 2 rows (variance undefined)");
    if (lambda0 < 0.0) throw std::invalid_argument("build_uncertainty: lambda0 must be >= 0");
    UncertaintySet u;
    u.lambda0 = lambda0;
    u.n = phi_matrix.rows();
    const double n = static_cast<double>(u.n);
    u.tau = phi_matrix.colwise().mean();
    u.lambda.resize(phi_matrix.cols());
    for (Eigen::Index j = 0; j < phi_matrix.cols(); ++j) {
        const double var = (phi_matrix.col(j).array() - u.tau[j]).square().sum() / n;
        u.lambda[j] = lambda0 * std::sqrt(std::max(var, 0.0) / n);
    }
    u.phi_matrix = phi_matrix;
    return u;
}

/// Block-form equivalent of the dense overload; avoids materializing the
/// sparse N x m matrix. Column (y, j) holds base(x_i, j) when labels[i] == y
/// and zero otherwise.
inline UncertaintySet build_uncertainty(const FeatureBatch& batch, double lambda0) {
    if (batch.n() < 2)
        throw std::invalid_argument("build_uncertainty: need at least 2 rows (variance undefined)");
    if (lambda0 < 0.0) throw std::invalid_argument("build_uncertainty: lambda0 must be >= 0");
    const int bd = batch.base_dim();
    const int k = batch.n_classes;
    const double n = static_cast<double>(batch.n());
    UncertaintySet u;
    u.lambda0 = lambda0;
    u.n = batch.n();
    u.tau = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bd) * k);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(u.tau.size());
    for (Eigen::Index i = 0; i < batch.n(); ++i) {
        const auto off = static_cast<Eigen::Index>(batch.labels[i]) * bd;
        u.tau.segment(off, bd) += batch.base.row(i).transpose();
        sumsq.segment(off, bd) += batch.base.row(i).transpose().cwiseAbs2();
    }
    u.tau /= n;
    u.lambda.resize(u.tau.size());
    for (Eigen::Index j = 0; j < u.tau.size(); ++j) {
        const double var = sumsq[j] / n - u.tau[j] * u.tau[j];
        u.lambda[j] = lambda0 * std::sqrt(std::max(var, 0.0) / n);
    }
    return u;
}

namespace mrc_detail {

/// phi(mu, x) = max over non-empty label subsets C of
/// (sum_{y in C} score_y - 1)/|C|, where score_y = phi(x,y).mu. For sorted
/// scores the maximizing C is a top-k prefix, so k candidates suffice.
/// Returns the value; when out_k is set, also reports the prefix size and
/// (through order) which labels it covers.
inline double subset_max(const Eigen::RowVectorXd& scores, std::array<int, 16>& order, int* out_k) {
    const int k = static_cast<int>(scores.size());
    for (int y = 0; y < k; ++y) order[y] = y;
    std::sort(order.begin(), order.begin() + k, [&](int a, int b) {
        return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
    });
    double prefix = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    int best_k = 1;
    for (int c = 1; c <= k; ++c) {
        prefix += scores[order[c - 1]];
        const double v = (prefix - 1.0) / c;
        if (v > best) {
            best = v;
            best_k = c;
        }
    }
    if (out_k) *out_k = best_k;
    return best;
}

}  // namespace mrc_detail

/// The training objective
///   F(mu) = lambda.|mu| - tau.mu + 1 + max_i phi(mu, x_i)
/// evaluated in block form, with one subgradient on request. Convex and
/// piecewise linear; F(0) = 1 - 1/|Y|.
class MrcObjective {
public:
    MrcObjective(const FeatureBatch& batch, const UncertaintySet& u)
        : batch_(batch), tau_(u.tau), lambda_(u.lambda) {
        if (tau_.size() != batch.output_dim())
            throw std::invalid_argument("MrcObjective: uncertainty set does not match the batch");
        scores_.resize(batch.n(), batch.n_classes);
    }

    int dim() const { return static_cast<int>(tau_.size()); }
    const Eigen::VectorXd& tau() const { return tau_; }
    const Eigen::VectorXd& lambda() const { return lambda_; }

    double operator()(const Eigen::VectorXd& mu, Eigen::VectorXd* grad) const {
        const int bd = batch_.base_dim();
        const int k = batch_.n_classes;
        Eigen::Map<const Eigen::MatrixXd> coef(mu.data(), bd, k);
        scores_.noalias() = batch_.base * coef;

        std::array<int, 16> order{};
        double best = -std::numeric_limits<double>::infinity();
        Eigen::Index best_i = 0;
        int best_k = 1;
        std::array<int, 16> best_order{};
        for (Eigen::Index i = 0; i < batch_.n(); ++i) {
            int cur_k = 0;
            const double v = mrc_detail::subset_max(scores_.row(i), order, &cur_k);
            if (v > best) {
                best = v;
                best_i = i;
                best_k = cur_k;
                best_order = order;
            }
        }

        double l1 = 0.0;
        for (Eigen::Index j = 0; j < mu.size(); ++j) l1 += lambda_[j] * std::abs(mu[j]);
        const double value = l1 - tau_.dot(mu) + 1.0 + best;

        if (grad) {
            grad->resize(mu.size());
            for (Eigen::Index j = 0; j < mu.size(); ++j) {
                const double s = mu[j] > 0.0 ? 1.0 : (mu[j] < 0.0 ? -1.0 : 0.0);
                (*grad)[j] = lambda_[j] * s - tau_[j];
            }
            const double w = 1.0 / best_k;
            for (int c = 0; c < best_k; ++c) {
                const auto off = static_cast<Eigen::Index>(best_order[c]) * bd;
                grad->segment(off, bd) += w * batch_.base.row(best_i).transpose();
            }
        }
        return value;
    }

private:
    const FeatureBatch& batch_;
    Eigen::VectorXd tau_;
    Eigen::VectorXd lambda_;
    mutable Eigen::MatrixXd scores_;
};

struct SolverMeta {
    int iterations = 0;
    double final_step = 0.0;
    std::string stop_reason;
    bool budget_exhausted = false;
};

/// Trained minimax rule: dual coefficients over the mapped space plus the
/// converged objective value (the worst-case 0-1 risk over the training
/// uncertainty set). Deterministic given (data, map, lambda0, config).
struct MrcModel {
    Eigen::VectorXd mu;
    SpectralMap map;
    double lambda0 = 0.0;
    double worst_case_risk = 0.0;
    std::vector<double> objective_trace;
    SolverMeta solver_meta;
};

inline MrcModel train(const Dataset& train_ds, const SpectralMap& map, double lambda0,
                      const SolverConfig& cfg = SolverConfig{}) {
    if (train_ds.n() < 2) throw std::invalid_argument("train: need at least 2 instances");
    int distinct = 0;
    std::vector<bool> seen_label(static_cast<std::size_t>(map.n_classes), false);
    for (Eigen::Index i = 0; i < train_ds.n(); ++i) {
        if (!seen_label[train_ds.labels[i]]) {
            seen_label[train_ds.labels[i]] = true;
            ++distinct;
        }
    }
    if (distinct < 2) throw std::invalid_argument("train: training data has fewer than 2 classes");

    const FeatureBatch batch = make_feature_batch(map, train_ds);
    const UncertaintySet u = build_uncertainty(batch, lambda0);
    const MrcObjective objective(batch, u);

    SolverConfig effective = cfg;
    effective.step_constant = cfg.step_constant / (1.0 + u.tau.norm());
    auto fn = [&objective](const Eigen::VectorXd& x, Eigen::VectorXd* g) { return objective(x, g); };
    NonsmoothResult res = minimize_nonsmooth(fn, objective.dim(), effective);

    MrcModel model;
    model.mu = std::move(res.x);
    model.map = map;
    model.lambda0 = lambda0;
    model.worst_case_risk = res.value;
    model.objective_trace = std::move(res.trace);
    model.solver_meta = {res.iterations, res.final_step, res.stop_reason, res.budget_exhausted};
    return model;
}

namespace mrc_detail {

inline Eigen::RowVectorXd class_scores(const MrcModel& model, const Eigen::VectorXd& base) {
    const int bd = model.map.base_dim();
    Eigen::Map<const Eigen::MatrixXd> coef(model.mu.data(), bd, model.map.n_classes);
    return base.transpose() * coef;
}

}  // namespace mrc_detail

/// Deterministic rule: argmax_y phi(x,y).mu with ties toward the smallest
/// label index.
inline int predict(const MrcModel& model, const Eigen::VectorXd& x) {
    const Eigen::RowVectorXd s = mrc_detail::class_scores(model, model.map.base_features(x));
    int best = 0;
    for (int y = 1; y < model.map.n_classes; ++y)
        if (s[y] > s[best]) best = y;
    return best;
}

inline Eigen::VectorXi predict_batch(const MrcModel& model, const Eigen::MatrixXd& X) {
    const Eigen::MatrixXd base = model.map.base_features(X);
    const int bd = model.map.base_dim();
    Eigen::Map<const Eigen::MatrixXd> coef(model.mu.data(), bd, model.map.n_classes);
    const Eigen::MatrixXd s = base * coef;
    Eigen::VectorXi out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        int best = 0;
        for (int y = 1; y < model.map.n_classes; ++y)
            if (s(i, y) > s(i, best)) best = y;
        out[i] = best;
    }
    return out;
}

/// Randomized companion of the deterministic rule: normalized positive parts
/// h(y|x) of (phi(x,y).mu - phi(mu, x)), which sum to one by construction of
/// the subset maximum; uniform when every part vanishes numerically.
inline Eigen::VectorXd predict_proba(const MrcModel& model, const Eigen::VectorXd& x) {
    const int k = model.map.n_classes;
    const Eigen::RowVectorXd s = mrc_detail::class_scores(model, model.map.base_features(x));
    std::array<int, 16> order{};
    const double threshold = mrc_detail::subset_max(s, order, nullptr);
    Eigen::VectorXd p(k);
    for (int y = 0; y < k; ++y) p[y] = std::max(s[y] - threshold, 0.0);
    const double total = p.sum();
    if (total <= 1e-15) return Eigen::VectorXd::Constant(k, 1.0 / k);
    return p / total;
}

}  // namespace spectre
