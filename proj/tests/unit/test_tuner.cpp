#include "spectre/tuner.hpp"

#include <gtest/gtest.h>

#include "spectre/fairness_metrics.hpp"
#include "spectre/serialization.hpp"
#include "support/test_util.hpp"

using namespace spectre;

namespace {

CandidateMetrics cand(double acc, double wce) {
    CandidateMetrics m;
    m.accuracy = acc;
    m.worst_class_error = wce;
    return m;
}

TuneConfig small_config(const Dataset& train) {
    TuneConfig cfg;
    cfg.D = 20;
    cfg.sigma_values = sigma_grid(train, cfg.D, 3);
    cfg.lambda_values = {0.05, 0.3};
    cfg.solver.max_iters = 1500;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST(Select, AccVersusWce) {
    const std::vector<CandidateMetrics> records{cand(0.8, 0.4), cand(0.7, 0.2)};
    EXPECT_EQ(select(records, TuneStrategy::ACC), 0);
    EXPECT_EQ(select(records, TuneStrategy::WCE), 1);
}

TEST(Select, TopNWceDegeneratesToWceWhenNExceedsList) {
    const std::vector<CandidateMetrics> records{cand(0.8, 0.4), cand(0.7, 0.2), cand(0.75, 0.3)};
    EXPECT_EQ(select(records, TuneStrategy::TOPN_WCE, 0.05, 5),
              select(records, TuneStrategy::WCE));
}

TEST(Select, TopNRestrictsToAccuracyLeaders) {
    // best-accuracy pair is {0, 2}; among them index 2 has the lower wce
    const std::vector<CandidateMetrics> records{cand(0.9, 0.5), cand(0.6, 0.1), cand(0.85, 0.3)};
    EXPECT_EQ(select(records, TuneStrategy::TOPN_WCE, 0.05, 2), 2);
}

TEST(Select, WceToleranceBandMaximizesAccuracy) {
    const std::vector<CandidateMetrics> records{cand(0.9, 0.30), cand(0.7, 0.20), cand(0.85, 0.24)};
    const double band = 0.20 + 0.05;  // min wce + margin
    EXPECT_EQ(select(records, TuneStrategy::WCE_T_A, band), 2);
}

TEST(Select, WceToleranceEmptyBandFallsBackToWce) {
    const std::vector<CandidateMetrics> records{cand(0.9, 0.30), cand(0.7, 0.20)};
    EXPECT_EQ(select(records, TuneStrategy::WCE_T_A, 0.01), 1);
}

TEST(Select, TiesBreakByAccuracyThenIndex) {
    const std::vector<CandidateMetrics> a{cand(0.8, 0.2), cand(0.9, 0.2)};
    EXPECT_EQ(select(a, TuneStrategy::WCE), 1);  // same wce, higher accuracy wins
    const std::vector<CandidateMetrics> b{cand(0.9, 0.2), cand(0.9, 0.2)};
    EXPECT_EQ(select(b, TuneStrategy::WCE), 0);  // fully tied: lower index
    EXPECT_EQ(select(b, TuneStrategy::ACC), 0);
}

TEST(Select, StrictlyDominantAccuracyAlwaysChosen) {
    std::vector<CandidateMetrics> records{cand(0.7, 0.1), cand(0.95, 0.9), cand(0.8, 0.05)};
    EXPECT_EQ(select(records, TuneStrategy::ACC), 1);
}

TEST(EvaluateCandidate, PerfectAndConstantModels) {
    const Dataset ds = spectre_test::separable_line(10);
    const SpectralMap map = polynomial_map(1, 1, 2);

    MrcModel good;
    good.map = map;
    good.mu = Eigen::VectorXd::Zero(4);
    good.mu[3] = 1.0;  // class-1 score = x
    const CandidateMetrics gm = evaluate_candidate(good, ds);
    EXPECT_DOUBLE_EQ(gm.accuracy, 1.0);
    EXPECT_DOUBLE_EQ(gm.worst_class_error, 0.0);

    MrcModel constant;
    constant.map = map;
    constant.mu = Eigen::VectorXd::Zero(4);  // always predicts label 0
    const CandidateMetrics cm = evaluate_candidate(constant, ds);
    EXPECT_DOUBLE_EQ(cm.accuracy, 0.5);
    EXPECT_DOUBLE_EQ(cm.worst_class_error, 1.0);
}

TEST(EvaluateCandidate, AgreesWithMetricsModule) {
    const Dataset data = standardize(generate_toy(300, 3));
    const SpectralMap map = sample_map(2, 15, 0.5, 2, 1);
    SolverConfig cfg;
    cfg.max_iters = 1500;
    const MrcModel model = train(data, map, 0.3, cfg);
    const CandidateMetrics m = evaluate_candidate(model, data);

    GroupedPredictions gp;  // single group: overall accuracy oracle
    gp.y_true = data.labels;
    gp.y_pred = predict_batch(model, data.features);
    gp.groups = Eigen::VectorXi::Zero(data.n());
    EXPECT_NEAR(m.accuracy, overall_accuracy(gp), 1e-12);

    // per-class errors recomputed independently
    for (int y = 0; y < 2; ++y) {
        double wrong = 0, count = 0;
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            if (data.labels[i] != y) continue;
            ++count;
            wrong += gp.y_pred[i] != y;
        }
        EXPECT_NEAR(m.class_errors[y], wrong / count, 1e-12);
    }
}

TEST(Tune, TrainingCountAndRecordLayout) {
    const Dataset data = standardize(generate_toy(120, 7));
    const auto [train_ds, val_ds, test_ds] = split(data, {0.3, 0.2, 7});
    TuneConfig cfg = small_config(train_ds);
    const TuneResult result = tune(train_ds, val_ds, cfg);

    EXPECT_EQ(result.trainings, 3 + 2);
    ASSERT_EQ(result.grid_records.size(), 5u);
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(result.grid_records[i].stage, 1);
        EXPECT_DOUBLE_EQ(result.grid_records[i].lambda0, cfg.lambda0_init);
    }
    for (int i = 3; i < 5; ++i) {
        EXPECT_EQ(result.grid_records[i].stage, 2);
        EXPECT_DOUBLE_EQ(result.grid_records[i].sigma, result.sigma_star);
    }
    EXPECT_TRUE(std::find(cfg.sigma_values.begin(), cfg.sigma_values.end(), result.sigma_star) !=
                cfg.sigma_values.end());
    EXPECT_TRUE(std::find(cfg.lambda_values.begin(), cfg.lambda_values.end(), result.lambda0_star) !=
                cfg.lambda_values.end());
    EXPECT_DOUBLE_EQ(result.final_model.lambda0, result.lambda0_star);
}

TEST(Tune, SingletonGridsPickTheSingletons) {
    const Dataset data = standardize(generate_toy(100, 9));
    const auto [train_ds, val_ds, test_ds] = split(data, {0.3, 0.2, 9});
    TuneConfig cfg = small_config(train_ds);
    cfg.sigma_values = {0.2};
    cfg.lambda_values = {0.3};
    const TuneResult result = tune(train_ds, val_ds, cfg);
    EXPECT_DOUBLE_EQ(result.sigma_star, 0.2);
    EXPECT_DOUBLE_EQ(result.lambda0_star, 0.3);
    EXPECT_EQ(result.trainings, 2);
}

TEST(Tune, DeterministicAcrossRuns) {
    const Dataset data = standardize(generate_toy(120, 11));
    const auto [train_ds, val_ds, test_ds] = split(data, {0.3, 0.2, 11});
    const TuneConfig cfg = small_config(train_ds);
    const TuneResult a = tune(train_ds, val_ds, cfg);
    const TuneResult b = tune(train_ds, val_ds, cfg);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

// Sensitive data must be invisible to tuning: shuffling or dropping the
// column cannot change a byte of the result.
TEST(Tune, BlindToSensitiveColumn) {
    const Dataset data = standardize(generate_toy(120, 13));
    const auto [train_ds, val_ds, test_ds] = split(data, {0.3, 0.2, 13});
    const TuneConfig cfg = small_config(train_ds);
    const TuneResult base = tune(train_ds, val_ds, cfg);

    Dataset shuffled = train_ds;
    Eigen::VectorXi s = *shuffled.sensitive;
    std::reverse(s.data(), s.data() + s.size());
    shuffled.sensitive = s;
    const TuneResult with_shuffled = tune(shuffled, val_ds, cfg);

    Dataset removed = train_ds;
    removed.sensitive.reset();
    removed.group_values.clear();
    removed.sensitive_names.clear();
    const TuneResult with_removed = tune(removed, val_ds, cfg);

    EXPECT_EQ(to_json(base).dump(), to_json(with_shuffled).dump());
    EXPECT_EQ(to_json(base).dump(), to_json(with_removed).dump());
}

TEST(Tune, FailedCandidatesAreRecordedAndSkipped) {
    const Dataset data = standardize(generate_toy(100, 17));
    const auto [train_ds, val_ds, test_ds] = split(data, {0.3, 0.2, 17});
    TuneConfig cfg = small_config(train_ds);
    cfg.lambda_values = {0.3, -1.0};  // second candidate fails inside training
    const TuneResult result = tune(train_ds, val_ds, cfg);
    EXPECT_DOUBLE_EQ(result.lambda0_star, 0.3);
    const auto& bad = result.grid_records.back();
    EXPECT_FALSE(bad.ok);
    EXPECT_FALSE(bad.error.empty());
}

TEST(Tune, AllCandidatesFailingIsAHardError) {
    const Dataset data = standardize(generate_toy(100, 19));
    const auto [train_ds, val_ds, test_ds] = split(data, {0.3, 0.2, 19});
    TuneConfig cfg = small_config(train_ds);
    cfg.lambda_values = {-1.0, -2.0};
    EXPECT_THROW(tune(train_ds, val_ds, cfg), SolverError);
}

TEST(Tune, RejectsBadConfigAndDegenerateValidation) {
    const Dataset data = standardize(generate_toy(100, 23));
    const auto [train_ds, val_ds, test_ds] = split(data, {0.3, 0.2, 23});
    TuneConfig cfg = small_config(train_ds);
    cfg.sigma_values.clear();
    EXPECT_THROW(tune(train_ds, val_ds, cfg), ConfigError);

    TuneConfig cfg2 = small_config(train_ds);
    Dataset oneclass = val_ds;
    oneclass.labels.setZero();
    EXPECT_THROW(tune(train_ds, oneclass, cfg2), std::invalid_argument);
}
