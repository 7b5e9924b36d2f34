// Minimal end-to-end run on the synthetic dataset: split, standardize, tune
// the two hyperparameters, and report test metrics per sensitive group.

#include <cstdio>

#include "spectre/dataset.hpp"
#include "spectre/fairness_metrics.hpp"
#include "spectre/spectral_map.hpp"
#include "spectre/tuner.hpp"

int main() {
    using namespace spectre;

    const Dataset raw = generate_toy(1000, 7);
    auto [train_ds, val_ds, test_ds] = split(raw, {0.3, 0.2, 7});
    train_ds = standardize(train_ds);
    const Standardization tr = *train_ds.standardization;
    val_ds = apply_standardization(val_ds, tr);
    test_ds = apply_standardization(test_ds, tr);

    TuneConfig cfg = default_tune_config(train_ds, /*D=*/120);
    cfg.strategy = TuneStrategy::WCE;
    cfg.sigma_values = sigma_grid(train_ds, cfg.D, 6);
    cfg.lambda_values = {0.05, 0.3, 1.0};
    cfg.solver.max_iters = 4000;

    const TuneResult result = tune(train_ds, val_ds, cfg);
    std::printf("sigma* = %.6f  lambda0* = %.3f  worst-case risk = %.4f\n", result.sigma_star,
                result.lambda0_star, result.final_model.worst_case_risk);

    GroupedPredictions gp;
    gp.y_true = test_ds.labels;
    gp.y_pred = predict_batch(result.final_model, test_ds.features);
    gp.groups = *test_ds.sensitive;
    std::printf("test accuracy          = %.4f\n", overall_accuracy(gp));
    for (const auto& [g, acc] : group_accuracies(gp))
        std::printf("  group %d accuracy     = %.4f\n", g, acc);
    std::printf("worst-group accuracy   = %.4f\n", worst_group_accuracy(gp));
    std::printf("max accuracy disparity = %.4f\n", max_acc_disparity(gp));
    return 0;
}
