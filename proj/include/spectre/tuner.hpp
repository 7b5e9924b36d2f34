#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "spectre/dataset.hpp"
#include "spectre/errors.hpp"
#include "spectre/mrc_core.hpp"
#include "spectre/parallel.hpp"
#include "spectre/spectral_map.hpp"

namespace spectre {

/// Demographics-blind selection strategies over validation metrics:
///   ACC       highest accuracy
///   WCE       lowest worst-class error
///   WCE_T_A   highest accuracy among candidates whose worst-class error is
///             within a tolerance band
///   TOPN_WCE  lowest worst-class error among the top-n by accuracy
enum class TuneStrategy { ACC, WCE, WCE_T_A, TOPN_WCE };

inline const char* to_string(TuneStrategy s) {
    switch (s) {
        case TuneStrategy::ACC: return "ACC";
        case TuneStrategy::WCE: return "WCE";
        case TuneStrategy::WCE_T_A: return "WCE_T_A";
        default: return "TOPN_WCE";
    }
}

inline TuneStrategy strategy_from_string(const std::string& s) {
    if (s == "ACC") return TuneStrategy::ACC;
    if (s == "WCE") return TuneStrategy::WCE;
    if (s == "WCE_T_A") return TuneStrategy::WCE_T_A;
    if (s == "TOPN_WCE") return TuneStrategy::TOPN_WCE;
    throw ConfigError("unknown tuning strategy '" + s + "'");
}

/// Validation metrics for one hyperparameter candidate. Per-class errors are
/// NaN for classes absent from the validation set; the worst-class error
/// ignores those.
struct CandidateMetrics {
    double accuracy = 0.0;
    std::vector<double> class_errors;
    double worst_class_error = 1.0;
};

struct TuneConfig {
    std::vector<double> sigma_values;
    std::vector<double> lambda_values;
    double lambda0_init = 0.3;
    TuneStrategy strategy = TuneStrategy::WCE;
    double tolerance = 0.05;  // WCE_T_A band width over the stage's best worst-class error
    int top_n = 5;
    int D = 600;
    std::uint64_t seed = 0;  // frequency-sampling seed
    SolverConfig solver;
    bool parallel = true;

    // Bad individual grid values are not rejected here: a candidate whose
    // training fails is recorded and excluded from selection instead.
    void validate() const {
        if (sigma_values.empty()) throw ConfigError("tune: sigma grid is empty");
        if (lambda_values.empty()) throw ConfigError("tune: lambda0 grid is empty");
        if (lambda0_init < 0.0) throw ConfigError("tune: lambda0_init must be non-negative");
        if (tolerance < 0.0) throw ConfigError("tune: tolerance must be non-negative");
        if (top_n < 1) throw ConfigError("tune: top_n must be >= 1");
        if (D < 1) throw ConfigError("tune: D must be >= 1");
    }
};

/// Default grids: 10 log-spaced sigmas over [0.1, 10] x sigma_scale and 10
/// log-spaced lambda0 values in [0.01, 1.0].
inline TuneConfig default_tune_config(const Dataset& train, int D = 600) {
    TuneConfig cfg;
    cfg.D = D;
    cfg.sigma_values = sigma_grid(train, D, 10);
    cfg.lambda_values.resize(10);
    const double llo = std::log(0.01), lhi = std::log(1.0);
    for (int i = 0; i < 10; ++i) cfg.lambda_values[i] = std::exp(llo + (lhi - llo) * i / 9.0);
    cfg.lambda_values.front() = 0.01;
    cfg.lambda_values.back() = 1.0;
    return cfg;
}

struct GridRecord {
    int stage = 1;  // 1 = sigma sweep, 2 = lambda0 sweep
    int index = 0;
    double sigma = 0.0;
    double lambda0 = 0.0;
    bool ok = false;
    std::string error;
    CandidateMetrics metrics;
    double worst_case_risk = 0.0;
};

struct TuneResult {
    double sigma_star = 0.0;
    double lambda0_star = 0.0;
    std::vector<GridRecord> grid_records;
    MrcModel final_model;
    int trainings = 0;
};

/// Validation accuracy and per-class error of a trained rule. Never touches
/// sensitive attributes.
inline CandidateMetrics evaluate_candidate(const MrcModel& model, const Dataset& val) {
    if (val.n() < 1) throw std::invalid_argument("evaluate_candidate: empty validation set");
    const Eigen::VectorXi pred = predict_batch(model, val.features);
    const int k = model.map.n_classes;
    std::vector<double> wrong(k, 0.0), count(k, 0.0);
    double correct = 0.0;
    for (Eigen::Index i = 0; i < val.n(); ++i) {
        const int y = val.labels[i];
        count[y] += 1.0;
        if (pred[i] == y)
            correct += 1.0;
        else
            wrong[y] += 1.0;
    }
    CandidateMetrics m;
    m.accuracy = correct / static_cast<double>(val.n());
    m.class_errors.assign(k, std::numeric_limits<double>::quiet_NaN());
    m.worst_class_error = 0.0;
    for (int y = 0; y < k; ++y) {
        if (count[y] > 0.0) {
            m.class_errors[y] = wrong[y] / count[y];
            m.worst_class_error = std::max(m.worst_class_error, m.class_errors[y]);
        }
    }
    return m;
}

/// Pick a candidate index per the strategy. `tolerance` is an absolute
/// worst-class-error ceiling for WCE_T_A; an empty feasible band falls back
/// to the WCE choice. Ties break toward higher accuracy, then lower index.
inline int select(const std::vector<CandidateMetrics>& records, TuneStrategy strategy,
                  double tolerance = 0.05, int top_n = 5) {
    if (records.empty()) throw std::invalid_argument("select: no candidates");
    const int n = static_cast<int>(records.size());

    auto better_acc = [&](int a, int b) {  // true when a beats b
        if (records[a].accuracy != records[b].accuracy) return records[a].accuracy > records[b].accuracy;
        return a < b;
    };
    auto better_wce = [&](int a, int b) {
        if (records[a].worst_class_error != records[b].worst_class_error)
            return records[a].worst_class_error < records[b].worst_class_error;
        return better_acc(a, b);
    };

    switch (strategy) {
        case TuneStrategy::ACC: {
            int best = 0;
            for (int i = 1; i < n; ++i)
                if (better_acc(i, best)) best = i;
            return best;
        }
        case TuneStrategy::WCE: {
            int best = 0;
            for (int i = 1; i < n; ++i)
                if (better_wce(i, best)) best = i;
            return best;
        }
        case TuneStrategy::WCE_T_A: {
            int best = -1;
            for (int i = 0; i < n; ++i) {
                if (records[i].worst_class_error > tolerance) continue;
                if (best < 0 || better_acc(i, best)) best = i;
            }
            if (best >= 0) return best;
            return select(records, TuneStrategy::WCE);
        }
        case TuneStrategy::TOPN_WCE: {
            std::vector<int> order(n);
            for (int i = 0; i < n; ++i) order[i] = i;
            std::sort(order.begin(), order.end(), better_acc);
            const int take = std::min(top_n, n);
            int best = order[0];
            for (int r = 1; r < take; ++r)
                if (better_wce(order[r], best)) best = order[r];
            return best;
        }
    }
    throw std::invalid_argument("select: unknown strategy");
}

namespace tuner_detail {

struct StageOutcome {
    std::vector<GridRecord> records;
    std::vector<MrcModel> models;  // empty slots where training failed
    int chosen = -1;
};

inline StageOutcome run_stage(int stage, const Dataset& train_ds, const Dataset& val,
                              const TuneConfig& cfg, const std::vector<double>& sigmas,
                              const std::vector<double>& lambdas, bool keep_models) {
    const std::size_t n = stage == 1 ? sigmas.size() : lambdas.size();
    StageOutcome out;
    out.records.resize(n);
    out.models.resize(n);
    parallel_for(
        n,
        [&](std::size_t i) {
            GridRecord rec;
            rec.stage = stage;
            rec.index = static_cast<int>(i);
            rec.sigma = stage == 1 ? sigmas[i] : sigmas[0];
            rec.lambda0 = stage == 1 ? lambdas[0] : lambdas[i];
            try {
                const SpectralMap map = sample_map(static_cast<int>(train_ds.dim()), cfg.D, rec.sigma,
                                                   train_ds.n_classes(), cfg.seed);
                MrcModel model = train(train_ds, map, rec.lambda0, cfg.solver);
                rec.metrics = evaluate_candidate(model, val);
                rec.worst_case_risk = model.worst_case_risk;
                rec.ok = true;
                if (keep_models) out.models[i] = std::move(model);
            } catch (const std::exception& e) {
                rec.ok = false;
                rec.error = e.what();
            }
            out.records[i] = std::move(rec);
        },
        cfg.parallel);

    std::vector<CandidateMetrics> ok_metrics;
    std::vector<int> ok_index;
    double min_wce = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (!out.records[i].ok) continue;
        ok_metrics.push_back(out.records[i].metrics);
        ok_index.push_back(static_cast<int>(i));
        min_wce = std::min(min_wce, out.records[i].metrics.worst_class_error);
    }
    if (ok_metrics.empty())
        throw SolverError("tune: every candidate failed in stage " + std::to_string(stage) +
                          " (first error: " + out.records[0].error + ")");
    const double band = min_wce + cfg.tolerance;
    out.chosen = ok_index[select(ok_metrics, cfg.strategy, band, cfg.top_n)];
    return out;
}

}  // namespace tuner_detail

/// Two-stage hyperparameter search: sweep sigma at lambda0_init, fix the
/// winner, then sweep lambda0 at the winning sigma. Exactly
/// |sigma_values| + |lambda_values| trainings; the final model is the
/// winning stage-2 candidate. Blind to sensitive attributes throughout.
inline TuneResult tune(const Dataset& train_ds, const Dataset& val, const TuneConfig& cfg) {
    cfg.validate();
    if (val.n() < 1) throw std::invalid_argument("tune: empty validation set");
    {
        std::vector<bool> seen(static_cast<std::size_t>(val.n_classes()), false);
        int distinct = 0;
        for (Eigen::Index i = 0; i < val.n(); ++i)
            if (!seen[val.labels[i]]) {
                seen[val.labels[i]] = true;
                ++distinct;
            }
        if (distinct < 2) throw std::invalid_argument("tune: validation set has fewer than 2 classes");
    }

    TuneResult result;
    auto stage1 = tuner_detail::run_stage(1, train_ds, val, cfg, cfg.sigma_values,
                                          {cfg.lambda0_init}, /*keep_models=*/false);
    result.sigma_star = cfg.sigma_values[stage1.chosen];
    result.trainings += static_cast<int>(stage1.records.size());

    auto stage2 = tuner_detail::run_stage(2, train_ds, val, cfg, {result.sigma_star},
                                          cfg.lambda_values, /*keep_models=*/true);
    result.lambda0_star = cfg.lambda_values[stage2.chosen];
    result.trainings += static_cast<int>(stage2.records.size());

    result.grid_records = std::move(stage1.records);
    for (auto& r : stage2.records) result.grid_records.push_back(std::move(r));
    result.final_model = std::move(stage2.models[stage2.chosen]);
    return result;
}

}  // namespace spectre
