#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "spectre/dataset.hpp"
#include "spectre/rng.hpp"

namespace spectre {

enum class MapKind { fourier, polynomial };

/// Feature mapping on instance-label pairs with Kronecker structure:
///   phi(x, y) = onehot(y) (x) base(x)
/// where base(x) is either the random Fourier block
///   sqrt(2/D) * [cos(w_1.x), sin(w_1.x), ..., cos(w_D.x), sin(w_D.x)]
/// with rows of omega drawn i.i.d. N(0, sigma^2 I), or the monomial block of
/// all terms of total degree <= degree (constant included).
///
/// Sampling is scale-coupled: omega(sigma) = sigma * omega_std with omega_std
/// drawn from the seed alone, so a sigma sweep changes only the spectrum and
/// not the Monte-Carlo draw. Immutable after construction.
struct SpectralMap {
    MapKind kind = MapKind::fourier;
    int d = 0;          // input dimension
    int D = 0;          // frequency count (fourier)
    int degree = 0;     // total degree (polynomial)
    int n_classes = 2;
    double sigma = 1.0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd omega;      // D x d (fourier)
    Eigen::MatrixXi exponents;  // n_monomials x d (polynomial)

    int base_dim() const {
        return kind == MapKind::fourier ? 2 * D : static_cast<int>(exponents.rows());
    }
    int output_dim() const { return base_dim() * n_classes; }

    /// Per-instance block shared by every label.
    Eigen::VectorXd base_features(const Eigen::VectorXd& x) const {
        if (x.size() != d) throw std::invalid_argument("spectral_map: input has wrong dimension");
        Eigen::VectorXd out(base_dim());
        if (kind == MapKind::fourier) {
            const double scale = std::sqrt(2.0 / D);
            const Eigen::VectorXd t = omega * x;
            for (int r = 0; r < D; ++r) {
                out[2 * r] = scale * std::cos(t[r]);
                out[2 * r + 1] = scale * std::sin(t[r]);
            }
        } else {
            for (Eigen::Index k = 0; k < exponents.rows(); ++k) {
                double v = 1.0;
                for (int j = 0; j < d; ++j)
                    for (int e = 0; e < exponents(k, j); ++e) v *= x[j];
                out[k] = v;
            }
        }
        return out;
    }

    /// Row-wise base blocks for a whole feature matrix.
    Eigen::MatrixXd base_features(const Eigen::MatrixXd& X) const {
        if (X.cols() != d) throw std::invalid_argument("spectral_map: input has wrong dimension");
        const Eigen::Index n = X.rows();
        Eigen::MatrixXd out(n, base_dim());
        if (kind == MapKind::fourier) {
            const double scale = std::sqrt(2.0 / D);
            const Eigen::MatrixXd t = X * omega.transpose();  // n x D
            for (int r = 0; r < D; ++r) {
                out.col(2 * r) = scale * t.col(r).array().cos();
                out.col(2 * r + 1) = scale * t.col(r).array().sin();
            }
        } else {
            for (Eigen::Index i = 0; i < n; ++i) out.row(i) = base_features(Eigen::VectorXd(X.row(i))).transpose();
        }
        return out;
    }
};

/// Draw a Fourier map: omega rows i.i.d. N(0, sigma^2 I_d), deterministic
/// under the seed, with omega(sigma) = (sigma/sigma') * omega(sigma') exactly.
inline SpectralMap sample_map(int d, int D, double sigma, int n_classes, std::uint64_t seed) {
    if (d < 1) throw std::invalid_argument("sample_map: d must be >= 1");
    if (D < 1) throw std::invalid_argument("sample_map: D must be >= 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("sample_map: sigma must be positive");
    if (n_classes < 2) throw std::invalid_argument("sample_map: need at least 2 classes");
    SpectralMap map;
    map.kind = MapKind::fourier;
    map.d = d;
    map.D = D;
    map.n_classes = n_classes;
    map.sigma = sigma;
    map.seed = seed;
    map.omega.resize(D, d);
    Rng rng(seed);
    for (int r = 0; r < D; ++r)
        for (int j = 0; j < d; ++j) map.omega(r, j) = sigma * rng.normal();
    return map;
}

/// Deterministic polynomial map: monomials ordered by total degree, then by
/// descending leading exponents, so d=2 degree=1 gives [1, x1, x2].
inline SpectralMap polynomial_map(int d, int degree, int n_classes) {
    if (d < 1) throw std::invalid_argument("polynomial_map: d must be >= 1");
    if (degree < 1) throw std::invalid_argument("polynomial_map: degree must be >= 1");
    if (n_classes < 2) throw std::invalid_argument("polynomial_map: need at least 2 classes");
    SpectralMap map;
    map.kind = MapKind::polynomial;
    map.d = d;
    map.degree = degree;
    map.n_classes = n_classes;
    std::vector<std::vector<int>> expo;
    std::vector<int> cur(d, 0);
    auto rec = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == d - 1) {
            cur[pos] = remaining;
            expo.push_back(cur);
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            cur[pos] = e;
            self(self, pos + 1, remaining - e);
        }
    };
    for (int total = 0; total <= degree; ++total) rec(rec, 0, total);
    map.exponents.resize(static_cast<Eigen::Index>(expo.size()), d);
    for (std::size_t k = 0; k < expo.size(); ++k)
        for (int j = 0; j < d; ++j) map.exponents(static_cast<Eigen::Index>(k), j) = expo[k][j];
    return map;
}

/// Full mapped vector for one pair: zero outside the block selected by y.
inline Eigen::VectorXd apply(const SpectralMap& map, const Eigen::VectorXd& x, int y) {
    if (y < 0 || y >= map.n_classes) throw std::invalid_argument("apply: label out of range");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(map.output_dim());
    out.segment(static_cast<Eigen::Index>(y) * map.base_dim(), map.base_dim()) = map.base_features(x);
    return out;
}

/// Mapped training data kept in block form: row i of `base` is base(x_i) and
/// the full mapped vector is that row placed at block labels[i].
struct FeatureBatch {
    Eigen::MatrixXd base;   // N x base_dim
    Eigen::VectorXi labels; // N
    int n_classes = 2;

    Eigen::Index n() const { return base.rows(); }
    int base_dim() const { return static_cast<int>(base.cols()); }
    int output_dim() const { return base_dim() * n_classes; }
};

inline FeatureBatch make_feature_batch(const SpectralMap& map, const Dataset& ds) {
    if (ds.n_classes() > map.n_classes)
        throw std::invalid_argument("make_feature_batch: dataset has more classes than the map");
    FeatureBatch batch;
    batch.base = map.base_features(ds.features);
    batch.labels = ds.labels;
    batch.n_classes = map.n_classes;
    return batch;
}

/// Dense N x m matrix with row i equal to apply(map, x_i, y_i).
inline Eigen::MatrixXd apply_batch(const SpectralMap& map, const Dataset& ds) {
    const FeatureBatch batch = make_feature_batch(map, ds);
    const int b = batch.base_dim();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(batch.n(), map.output_dim());
    for (Eigen::Index i = 0; i < batch.n(); ++i)
        out.block(i, static_cast<Eigen::Index>(batch.labels[i]) * b, 1, b) = batch.base.row(i);
    return out;
}

/// Reference bandwidth sqrt(2 / (D * var(X))) with var(X) the mean of the
/// per-column population variances of the training features.
inline double sigma_scale(const Dataset& train, int D) {
    if (D < 1) throw std::invalid_argument("sigma_scale: D must be >= 1");
    const double n = static_cast<double>(train.n());
    double mean_var = 0.0;
    for (Eigen::Index j = 0; j < train.dim(); ++j) {
        const double mu = train.features.col(j).mean();
        mean_var += (train.features.col(j).array() - mu).square().sum() / n;
    }
    mean_var /= static_cast<double>(train.dim());
    if (!(mean_var > 0.0)) throw std::invalid_argument("sigma_scale: training features have zero variance");
    return std::sqrt(2.0 / (D * mean_var));
}

/// Log-spaced bandwidth grid over [0.1 * sigma_scale, 10 * sigma_scale].
inline std::vector<double> sigma_grid(const Dataset& train, int D, int n_points) {
    if (n_points < 2) throw std::invalid_argument("sigma_grid: need at least 2 points");
    const double s = sigma_scale(train, D);
    const double lo = 0.1 * s;
    const double hi = 10.0 * s;
    std::vector<double> grid(n_points);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n_points; ++i)
        grid[i] = std::exp(llo + (lhi - llo) * i / (n_points - 1));
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

}  // namespace spectre
