#include "spectre/mrc_core.hpp"

#include <gtest/gtest.h>

#include "spectre/guarantees.hpp"
#include "spectre/rng.hpp"
#include "support/test_util.hpp"

using namespace spectre;
using spectre_test::make_dataset;
using spectre_test::random_binary;
using spectre_test::separable_line;

namespace {

SolverConfig precise_config() {
    SolverConfig cfg;
    cfg.max_iters = 300000;
    cfg.patience = 50000;
    cfg.tolerance = 1e-12;
    return cfg;
}

}  // namespace

TEST(Uncertainty, BernoulliColumnBandWidth) {
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(100, 1);
    for (int i = 0; i < 50; ++i) phi(i, 0) = 1.0;
    const UncertaintySet u = build_uncertainty(phi, 0.3);
    EXPECT_NEAR(u.lambda[0], 0.015, 1e-12);  // 0.3 * sqrt(0.25 / 100)
    EXPECT_NEAR(u.tau[0], 0.5, 1e-12);
}

TEST(Uncertainty, ZeroLambda0GivesZeroBand) {
    Eigen::MatrixXd phi(3, 2);
    phi << 1, 0, 0, 1, 1, 1;
    const UncertaintySet u = build_uncertainty(phi, 0.0);
    EXPECT_EQ(u.lambda.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Uncertainty, ConstantColumnHasZeroBand) {
    Eigen::MatrixXd phi(4, 2);
    phi << 2, 1, 2, 3, 2, -1, 2, 0;
    const UncertaintySet u = build_uncertainty(phi, 5.0);
    EXPECT_EQ(u.lambda[0], 0.0);
    EXPECT_GT(u.lambda[1], 0.0);
}

TEST(Uncertainty, RejectsSingleRowAndNegativeLambda0) {
    Eigen::MatrixXd phi(1, 2);
    phi << 1, 2;
    EXPECT_THROW(build_uncertainty(phi, 0.3), std::invalid_argument);
    Eigen::MatrixXd ok(2, 1);
    ok << 1, 2;
    EXPECT_THROW(build_uncertainty(ok, -0.1), std::invalid_argument);
}

TEST(Uncertainty, BlockFormMatchesDense) {
    const Dataset ds = generate_toy(60, 21);
    const SpectralMap map = sample_map(2, 7, 0.8, 2, 3);
    const UncertaintySet dense = build_uncertainty(apply_batch(map, ds), 0.4);
    const UncertaintySet block = build_uncertainty(make_feature_batch(map, ds), 0.4);
    EXPECT_LT((dense.tau - block.tau).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((dense.lambda - block.lambda).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(dense.tau[3], dense.phi_matrix.col(3).mean(), 1e-12);
}

TEST(Objective, ValueAtZeroIsHalfForBinary) {
    const Dataset ds = separable_line(5);
    const SpectralMap map = polynomial_map(1, 1, 2);
    const FeatureBatch batch = make_feature_batch(map, ds);
    const MrcObjective f(batch, build_uncertainty(batch, 0.3));
    EXPECT_NEAR(f(Eigen::VectorXd::Zero(f.dim()), nullptr), 0.5, 1e-12);
}

TEST(Objective, SubgradientMatchesFiniteDifferenceWhereSmooth) {
    const Dataset ds = random_binary(8, 2, 3);
    const SpectralMap map = sample_map(2, 2, 1.0, 2, 7);
    const FeatureBatch batch = make_feature_batch(map, ds);
    const MrcObjective f(batch, build_uncertainty(batch, 0.2));
    Rng rng(10);
    Eigen::VectorXd mu(f.dim());
    for (int j = 0; j < f.dim(); ++j) mu[j] = rng.normal();
    Eigen::VectorXd g;
    const double fx = f(mu, &g);
    for (int j = 0; j < f.dim(); ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(f.dim());
        const double h = 1e-7;
        e[j] = h;
        const double fwd = f(mu + e, nullptr);
        // convexity: forward difference must dominate the subgradient slope
        EXPECT_GE((fwd - fx) / h, g[j] - 1e-4);
    }
}

// Training on a separable 1-D problem with a degree-1 polynomial map: the
// learned rule must classify the training set perfectly and the objective
// must match the exact LP reformulation.
TEST(Train, SeparableLineIsLearnedAndMatchesLpOracle) {
    const Dataset ds = separable_line(50);
    const SpectralMap map = polynomial_map(1, 1, 2);
    const MrcModel model = train(ds, map, 0.01, precise_config());

    int errors = 0;
    for (Eigen::Index i = 0; i < ds.n(); ++i)
        errors += predict(model, Eigen::VectorXd(ds.features.row(i))) != ds.labels[i];
    EXPECT_EQ(errors, 0);
    EXPECT_LE(model.worst_case_risk, 0.1);

    const FeatureBatch batch = make_feature_batch(map, ds);
    const UncertaintySet u = build_uncertainty(batch, 0.01);
    const LpSolution lp = solve_lp(
        mrc_lp_reformulation(apply_batch(map, ds), u.tau, u.lambda, ds.labels, 2));
    ASSERT_EQ(lp.status, LpStatus::optimal);
    EXPECT_NEAR(model.worst_case_risk, lp.objective_value, 1e-3);
}

TEST(Train, DeterministicAcrossRuns) {
    const Dataset ds = random_binary(20, 2, 5);
    const SpectralMap map = sample_map(2, 3, 1.0, 2, 11);
    SolverConfig cfg;
    cfg.max_iters = 3000;
    const MrcModel a = train(ds, map, 0.3, cfg);
    const MrcModel b = train(ds, map, 0.3, cfg);
    EXPECT_TRUE(a.mu == b.mu);
    EXPECT_EQ(a.worst_case_risk, b.worst_case_risk);
}

TEST(Train, RejectsSingleClassData) {
    Eigen::MatrixXd X(4, 1);
    X << 1, 2, 3, 4;
    Eigen::VectorXi y = Eigen::VectorXi::Zero(4);
    const Dataset ds = make_dataset(X, y);
    const SpectralMap map = polynomial_map(1, 1, 2);
    EXPECT_THROW(train(ds, map, 0.1), std::invalid_argument);
}

TEST(Train, ObjectiveTraceIsNonIncreasing) {
    const Dataset ds = random_binary(15, 2, 8);
    const SpectralMap map = sample_map(2, 2, 0.7, 2, 2);
    SolverConfig cfg;
    cfg.max_iters = 2000;
    const MrcModel model = train(ds, map, 0.2, cfg);
    for (std::size_t i = 1; i < model.objective_trace.size(); ++i)
        EXPECT_LE(model.objective_trace[i], model.objective_trace[i - 1]);
    EXPECT_GE(model.worst_case_risk, 0.0);
    EXPECT_LE(model.worst_case_risk, 0.5 + 1e-9);
}

TEST(Train, WorstCaseRiskMonotoneInLambda0) {
    const Dataset ds = random_binary(25, 2, 12);
    const SpectralMap map = sample_map(2, 3, 1.0, 2, 4);
    const SolverConfig cfg = precise_config();
    double prev = -1.0;
    for (double l0 : {0.0, 0.3, 1.0, 3.0}) {
        const MrcModel model = train(ds, map, l0, cfg);
        EXPECT_GE(model.worst_case_risk, prev - 1e-4) << "lambda0 " << l0;
        prev = model.worst_case_risk;
    }
}

TEST(Predict, ZeroCoefficientsTieBreakToSmallestLabel) {
    const Dataset ds = separable_line(3);
    const SpectralMap map = polynomial_map(1, 1, 2);
    MrcModel model;
    model.map = map;
    model.mu = Eigen::VectorXd::Zero(map.output_dim());
    Eigen::VectorXd x(1);
    x << 0.7;
    EXPECT_EQ(predict(model, x), 0);
}

TEST(Predict, FollowsScoreArgmax) {
    const SpectralMap map = polynomial_map(1, 1, 2);
    MrcModel model;
    model.map = map;
    model.mu = Eigen::VectorXd::Zero(4);
    model.mu[3] = 1.0;  // class-1 block weight on x
    Eigen::VectorXd x(1);
    x << 2.0;
    EXPECT_EQ(predict(model, x), 1);
    x << -2.0;
    EXPECT_EQ(predict(model, x), 0);
}

TEST(PredictProba, UniformAtZeroCoefficients) {
    const SpectralMap map = polynomial_map(1, 1, 3);
    MrcModel model;
    model.map = map;
    model.mu = Eigen::VectorXd::Zero(map.output_dim());
    Eigen::VectorXd x(1);
    x << 0.3;
    const Eigen::VectorXd p = predict_proba(model, x);
    for (int y = 0; y < 3; ++y) EXPECT_NEAR(p[y], 1.0 / 3, 1e-12);
}

TEST(PredictProba, SumsToOneAndAgreesWithPredict) {
    const Dataset ds = random_binary(30, 2, 31);
    const SpectralMap map = sample_map(2, 4, 1.2, 2, 9);
    SolverConfig cfg;
    cfg.max_iters = 4000;
    const MrcModel model = train(ds, map, 0.3, cfg);
    Rng rng(77);
    for (int t = 0; t < 1000; ++t) {
        Eigen::VectorXd x(2);
        x << rng.normal(), rng.normal();
        const Eigen::VectorXd p = predict_proba(model, x);
        EXPECT_NEAR(p.sum(), 1.0, 1e-12);
        EXPECT_GE(p.minCoeff(), 0.0);
        int arg = 0;
        for (int y = 1; y < 2; ++y)
            if (p[y] > p[arg]) arg = y;
        if (p[arg] > p[1 - arg] + 1e-12) EXPECT_EQ(arg, predict(model, x));
    }
}

// The trained model's worst-case risk must equal the overall-risk upper bound
// of its own randomized rule over the training uncertainty set.
TEST(Train, MinimaxConsistencyOnSmallProblem) {
    const Dataset ds = random_binary(12, 2, 42);
    const SpectralMap map = sample_map(2, 1, 0.9, 2, 13);  // m = 4
    const MrcModel model = train(ds, map, 0.4, precise_config());

    const FeatureBatch batch = make_feature_batch(map, ds);
    const UncertaintySet u = build_uncertainty(batch, 0.4);
    const AuditSet audit = randomized_rule_audit(ds, map, model);
    const GroupBound bound = overall_bounds(audit, u);
    ASSERT_EQ(bound.upper_status, BoundStatus::optimal);
    EXPECT_NEAR(bound.upper, model.worst_case_risk, 1e-3);
}
