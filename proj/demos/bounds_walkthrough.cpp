// Out-of-sample error bands for a frozen rule: train once, audit a
// group-labelled subset of the training data, and print the per-group
// [lower, upper] error interval for a few band widths.

#include <cstdio>

#include "spectre/dataset.hpp"
#include "spectre/guarantees.hpp"
#include "spectre/mrc_core.hpp"
#include "spectre/spectral_map.hpp"

int main() {
    using namespace spectre;

    const Dataset raw = generate_toy(1000, 21);
    auto [train_ds, val_ds, test_ds] = split(raw, {0.3, 0.2, 21});
    train_ds = standardize(train_ds);
    test_ds = apply_standardization(test_ds, *train_ds.standardization);

    const SpectralMap map = sample_map(2, 200, sigma_scale(train_ds, 200), 2, 3);
    SolverConfig solver;
    solver.max_iters = 8000;
    const MrcModel model = train(train_ds, map, 0.3, solver);

    // audit subset of the training data, frozen-rule losses
    const auto idx = audit_indices(train_ds, 0.3, 11);
    Eigen::VectorXd losses(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const Eigen::VectorXd x = train_ds.features.row(idx[r]);
        losses[static_cast<Eigen::Index>(r)] = predict(model, x) != train_ds.labels[idx[r]] ? 1.0 : 0.0;
    }

    // reduced map for the band computation (valid for any blind mapping)
    const SpectralMap bmap = sample_map(2, 50, sigma_scale(train_ds, 50), 2, 5);
    const AuditSet audit = build_audit(train_ds, idx, bmap, losses);

    std::printf("%8s %8s %10s %10s\n", "lambda0", "group", "lower", "upper");
    for (double lambda0 : {0.1, 0.5, 1.0, 5.0}) {
        const UncertaintySet u = bounds_uncertainty(audit, lambda0, MomentSource::audit);
        for (int g = 0; g < 2; ++g) {
            const GroupBound b = group_bounds(audit, u, g);
            std::printf("%8.2f %8d %10.4f %10.4f%s\n", lambda0, g, b.lower, b.upper,
                        b.low_confidence ? "  (small group)" : "");
        }
    }
    return 0;
}
