#pragma once

#include <Eigen/Dense>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace spectre {

/// Predictions joined with ground truth and (required here) group ids.
/// positive_label selects the outcome used by the rate-parity metrics.
struct GroupedPredictions {
    Eigen::VectorXi y_true;
    Eigen::VectorXi y_pred;
    Eigen::VectorXi groups;
    int positive_label = 1;

    void validate() const {
        if (y_true.size() != y_pred.size() || y_true.size() != groups.size())
            throw std::invalid_argument("GroupedPredictions: length mismatch");
        if (y_true.size() == 0) throw std::invalid_argument("GroupedPredictions: empty");
    }
};

inline double overall_accuracy(const GroupedPredictions& gp) {
    gp.validate();
    double correct = 0;
    for (Eigen::Index i = 0; i < gp.y_true.size(); ++i)
        if (gp.y_true[i] == gp.y_pred[i]) ++correct;
    return correct / static_cast<double>(gp.y_true.size());
}

/// Mean correctness per group, keyed by group id.
inline std::map<int, double> group_accuracies(const GroupedPredictions& gp) {
    gp.validate();
    std::map<int, std::pair<double, double>> acc;  // id -> (correct, count)
    for (Eigen::Index i = 0; i < gp.y_true.size(); ++i) {
        auto& slot = acc[gp.groups[i]];
        slot.first += gp.y_true[i] == gp.y_pred[i] ? 1.0 : 0.0;
        slot.second += 1.0;
    }
    std::map<int, double> out;
    for (const auto& [g, s] : acc) out[g] = s.first / s.second;
    return out;
}

inline double worst_group_accuracy(const GroupedPredictions& gp) {
    const auto acc = group_accuracies(gp);
    if (acc.empty()) throw std::invalid_argument("worst_group_accuracy: no groups");
    double worst = 1.0;
    for (const auto& [g, a] : acc) worst = std::min(worst, a);
    return worst;
}

/// Largest pairwise gap between group accuracies (0 for a single group).
inline double max_acc_disparity(const GroupedPredictions& gp) {
    const auto acc = group_accuracies(gp);
    if (acc.empty()) throw std::invalid_argument("max_acc_disparity: no groups");
    double lo = 1.0, hi = 0.0;
    for (const auto& [g, a] : acc) {
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    return acc.size() < 2 ? 0.0 : hi - lo;
}

/// Equality of opportunity: max pairwise true-positive-rate gap across
/// groups. Groups with no positive ground-truth instances are excluded (and
/// reported through `warnings` when given).
inline double eop(const GroupedPredictions& gp, std::vector<std::string>* warnings = nullptr) {
    gp.validate();
    std::map<int, std::pair<double, double>> tp;  // id -> (true positives, positives)
    for (Eigen::Index i = 0; i < gp.y_true.size(); ++i) {
        if (gp.y_true[i] != gp.positive_label) continue;
        auto& slot = tp[gp.groups[i]];
        slot.second += 1.0;
        if (gp.y_pred[i] == gp.positive_label) slot.first += 1.0;
    }
    std::map<int, bool> present;
    for (Eigen::Index i = 0; i < gp.groups.size(); ++i) present[gp.groups[i]] = true;
    if (warnings)
        for (const auto& [g, _] : present)
            if (!tp.count(g))
                warnings->push_back("eop: group " + std::to_string(g) +
                                    " has no positive ground-truth instances; excluded");
    if (tp.empty()) throw std::invalid_argument("eop: positive label absent from every group");
    double lo = 1.0, hi = 0.0;
    for (const auto& [g, s] : tp) {
        const double rate = s.first / s.second;
        lo = std::min(lo, rate);
        hi = std::max(hi, rate);
    }
    return tp.size() < 2 ? 0.0 : hi - lo;
}

/// Demographic parity: max pairwise gap in positive-prediction rate.
inline double dp(const GroupedPredictions& gp) {
    gp.validate();
    std::map<int, std::pair<double, double>> pos;  // id -> (predicted positive, count)
    for (Eigen::Index i = 0; i < gp.y_true.size(); ++i) {
        auto& slot = pos[gp.groups[i]];
        slot.second += 1.0;
        if (gp.y_pred[i] == gp.positive_label) slot.first += 1.0;
    }
    double lo = 1.0, hi = 0.0;
    for (const auto& [g, s] : pos) {
        const double rate = s.first / s.second;
        lo = std::min(lo, rate);
        hi = std::max(hi, rate);
    }
    return pos.size() < 2 ? 0.0 : hi - lo;
}

}  // namespace spectre
