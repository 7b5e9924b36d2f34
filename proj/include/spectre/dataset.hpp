#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "spectre/errors.hpp"
#include "spectre/rng.hpp"

namespace spectre {

/// Per-column z-scoring transform fitted on some reference data.
/// Constant columns are flagged and map to all-zeros instead of dividing by 0.
struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;          // population (1/N) convention
    std::vector<bool> constant;      // true where the fitted column had zero variance
};

/// Tabular classification data. Labels are dense ids in {0..n_classes-1};
/// sensitive group ids (when present) are dense ids in {0..n_groups-1}.
/// Immutable by convention: operations return new datasets.
struct Dataset {
    Eigen::MatrixXd features;                  // N x d
    Eigen::VectorXi labels;                    // N
    std::optional<Eigen::VectorXi> sensitive;  // N, group ids
    std::vector<std::string> feature_names;    // d
    std::string label_name = "y";
    std::vector<std::string> sensitive_names;  // source column names (possibly several)
    std::vector<std::string> label_values;     // original label text per id (sorted order)
    std::vector<std::string> group_values;     // original group text per id (first appearance)
    std::optional<Standardization> standardization;

    Eigen::Index n() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }
    int n_classes() const { return static_cast<int>(label_values.size()); }
    int n_groups() const { return static_cast<int>(group_values.size()); }
};

struct SplitSpec {
    double test_fraction = 0.3;
    double val_fraction_of_train = 0.2;
    std::uint64_t seed = 0;
};

namespace detail {

inline void check_dataset(const Dataset& ds) {
    if (ds.n() < 1) throw std::invalid_argument("dataset: needs at least one row");
    if (ds.labels.size() != ds.n()) throw std::invalid_argument("dataset: label count mismatch");
    if (static_cast<Eigen::Index>(ds.feature_names.size()) != ds.dim())
        throw std::invalid_argument("dataset: feature name count mismatch");
    const int k = ds.n_classes();
    for (Eigen::Index i = 0; i < ds.labels.size(); ++i)
        if (ds.labels[i] < 0 || ds.labels[i] >= k)
            throw std::invalid_argument("dataset: label id out of range at row " + std::to_string(i));
    if (ds.sensitive) {
        if (ds.sensitive->size() != ds.n())
            throw std::invalid_argument("dataset: sensitive count mismatch");
        const int g = ds.n_groups();
        for (Eigen::Index i = 0; i < ds.sensitive->size(); ++i)
            if ((*ds.sensitive)[i] < 0 || (*ds.sensitive)[i] >= g)
                throw std::invalid_argument("dataset: group id out of range at row " + std::to_string(i));
    }
}

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
    if (b == e) return false;
    auto [ptr, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && ptr == e;
}

// RFC-4180-style record reader: quoted fields, doubled quotes, CRLF endings.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int ch;
    while ((ch = in.get()) != EOF) {
        any = true;
        char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            fields.push_back(std::move(field));
            return true;
        } else {
            field.push_back(c);
        }
    }
    if (!any) return false;
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(std::move(field));
    return true;
}

}  // namespace detail

/// Synthetic two-feature binary task with a 90% majority group and a 10%
/// minority group. Class labels are balanced within each group; the four
/// group/label cells are isotropic Gaussians:
///   s=1,y=1: mean [6,0], cov I       s=1,y=0: mean [2,0], cov I
///   s=0,y=1: mean [-4,2], cov 2.5*I  s=0,y=0: mean [-2,0], cov 2.5*I
/// The majority group is separable from X1 alone; the minority group needs
/// both features and is more dispersed. Output is not standardized.
inline Dataset generate_toy(int n, std::uint64_t seed) {
    if (n < 10) throw std::invalid_argument("generate_toy: n must be >= 10");
    Rng rng(seed);
    Dataset ds;
    ds.features.resize(n, 2);
    ds.labels.resize(n);
    Eigen::VectorXi sens(n);
    const double means[2][2][2] = {
        // [s][y] -> {m1, m2}
        {{-2.0, 0.0}, {-4.0, 2.0}},  // s = 0
        {{2.0, 0.0}, {6.0, 0.0}},    // s = 1
    };
    const double sd[2] = {std::sqrt(2.5), 1.0};  // per group
    for (int i = 0; i < n; ++i) {
        const int s = rng.uniform() < 0.9 ? 1 : 0;
        const int y = rng.uniform() < 0.5 ? 1 : 0;
        ds.features(i, 0) = means[s][y][0] + sd[s] * rng.normal();
        ds.features(i, 1) = means[s][y][1] + sd[s] * rng.normal();
        ds.labels[i] = y;
        sens[i] = s;
    }
    ds.sensitive = std::move(sens);
    ds.feature_names = {"x1", "x2"};
    ds.label_name = "y";
    ds.sensitive_names = {"s"};
    ds.label_values = {"0", "1"};
    ds.group_values = {"0", "1"};
    return ds;
}

/// Load a headered CSV. Every column is a numeric feature except the label
/// column, the sensitive columns, and any excluded columns. Sensitive values
/// (single column or tuple across several) get group ids in first-appearance
/// order; label ids follow sorted order of the distinct values.
inline Dataset load_csv(const std::string& path, const std::string& label_column,
                        const std::vector<std::string>& sensitive_columns = {},
                        const std::vector<std::string>& exclude_columns = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_csv: cannot open '" + path + "'");
    std::vector<std::string> header;
    if (!detail::read_csv_record(in, header) || header.empty())
        throw DataError("load_csv: '" + path + "': empty file (header row required)");

    auto col_index = [&](const std::string& name) -> int {
        auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
    };

    const int label_col = col_index(label_column);
    if (label_col < 0)
        throw DataError("load_csv: '" + path + "': label column '" + label_column + "' not found");
    std::vector<int> sens_cols;
    for (const auto& name : sensitive_columns) {
        const int c = col_index(name);
        if (c < 0) throw DataError("load_csv: '" + path + "': sensitive column '" + name + "' not found");
        sens_cols.push_back(c);
    }
    std::vector<bool> skip(header.size(), false);
    skip[label_col] = true;
    for (int c : sens_cols) skip[c] = true;
    for (const auto& name : exclude_columns) {
        const int c = col_index(name);
        if (c >= 0) skip[c] = true;
    }
    std::vector<int> feat_cols;
    for (int c = 0; c < static_cast<int>(header.size()); ++c)
        if (!skip[c]) feat_cols.push_back(c);

    std::vector<std::vector<double>> rows;
    std::vector<std::string> label_raw;
    std::vector<std::string> group_raw;
    std::vector<std::string> record;
    std::size_t line_no = 1;
    while (detail::read_csv_record(in, record)) {
        ++line_no;
        if (record.size() == 1 && record[0].empty()) continue;  // blank trailing line
        if (record.size() != header.size())
            throw DataError("load_csv: '" + path + "' row " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " + std::to_string(record.size()));
        std::vector<double> row(feat_cols.size());
        for (std::size_t j = 0; j < feat_cols.size(); ++j) {
            const std::string& cell = record[feat_cols[j]];
            if (cell.empty())
                throw DataError("load_csv: '" + path + "' row " + std::to_string(line_no) + ", column '" +
                                header[feat_cols[j]] + "': missing value");
            if (!detail::parse_double(cell, row[j]))
                throw DataError("load_csv: '" + path + "' row " + std::to_string(line_no) + ", column '" +
                                header[feat_cols[j]] + "': non-numeric value '" + cell + "'");
        }
        rows.push_back(std::move(row));
        if (record[label_col].empty())
            throw DataError("load_csv: '" + path + "' row " + std::to_string(line_no) + ", column '" +
                            label_column + "': missing label");
        label_raw.push_back(record[label_col]);
        if (!sens_cols.empty()) {
            std::string key;
            for (std::size_t k = 0; k < sens_cols.size(); ++k) {
                if (k) key.push_back('|');
                key += record[sens_cols[k]];
            }
            group_raw.push_back(std::move(key));
        }
    }
    if (rows.empty()) throw DataError("load_csv: '" + path + "': no data rows");

    Dataset ds;
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto d = static_cast<Eigen::Index>(feat_cols.size());
    ds.features.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) ds.features(i, j) = rows[i][j];
    for (int c : feat_cols) ds.feature_names.push_back(header[c]);
    ds.label_name = label_column;
    for (int c : sens_cols) ds.sensitive_names.push_back(header[c]);

    // Label ids in sorted order (numeric when every value parses as a number).
    std::vector<std::string> distinct = label_raw;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    bool all_numeric = true;
    std::vector<double> numeric(distinct.size());
    for (std::size_t k = 0; k < distinct.size(); ++k)
        if (!detail::parse_double(distinct[k], numeric[k])) { all_numeric = false; break; }
    if (all_numeric) {
        std::vector<std::size_t> order(distinct.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return numeric[a] != numeric[b] ? numeric[a] < numeric[b] : distinct[a] < distinct[b];
        });
        std::vector<std::string> sorted;
        for (auto k : order) sorted.push_back(distinct[k]);
        distinct = std::move(sorted);
    }
    std::map<std::string, int> label_id;
    for (std::size_t k = 0; k < distinct.size(); ++k) label_id[distinct[k]] = static_cast<int>(k);
    ds.label_values = distinct;
    ds.labels.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) ds.labels[i] = label_id[label_raw[i]];

    if (!sens_cols.empty()) {
        std::map<std::string, int> group_id;
        Eigen::VectorXi sens(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            auto it = group_id.find(group_raw[i]);
            if (it == group_id.end()) {
                it = group_id.emplace(group_raw[i], static_cast<int>(ds.group_values.size())).first;
                ds.group_values.push_back(group_raw[i]);
            }
            sens[i] = it->second;
        }
        ds.sensitive = std::move(sens);
    }
    detail::check_dataset(ds);
    return ds;
}

/// Write the dataset back out as CSV (features, then sensitive, then label),
/// using the original value vocabulary for label and group columns.
inline void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_csv: cannot open '" + path + "' for writing");
    for (Eigen::Index j = 0; j < ds.dim(); ++j) out << ds.feature_names[j] << ',';
    if (ds.sensitive) {
        for (std::size_t k = 0; k < ds.sensitive_names.size(); ++k) out << ds.sensitive_names[k] << ',';
        if (ds.sensitive_names.empty()) out << "s,";
    }
    out << ds.label_name << '\n';
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        for (Eigen::Index j = 0; j < ds.dim(); ++j) out << detail::format_double(ds.features(i, j)) << ',';
        if (ds.sensitive) out << ds.group_values[(*ds.sensitive)[i]] << ',';
        out << ds.label_values[ds.labels[i]] << '\n';
    }
    if (!out) throw DataError("save_csv: write failed for '" + path + "'");
}

/// Apply a fitted standardization to a dataset (same arithmetic as the fit,
/// so replaying on the fitted data reproduces it exactly).
inline Dataset apply_standardization(const Dataset& ds, const Standardization& tr) {
    if (tr.mean.size() != ds.dim())
        throw std::invalid_argument("apply_standardization: dimension mismatch");
    Dataset out = ds;
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
        if (tr.constant[j]) {
            out.features.col(j).setZero();
        } else {
            out.features.col(j) = (ds.features.col(j).array() - tr.mean[j]) / tr.stddev[j];
        }
    }
    out.standardization = tr;
    return out;
}

/// Fit a per-column z-scoring on this dataset and apply it. Population (1/N)
/// variance; constant columns become all-zero and are flagged.
inline Dataset standardize(const Dataset& ds) {
    detail::check_dataset(ds);
    Standardization tr;
    const auto n = static_cast<double>(ds.n());
    tr.mean = ds.features.colwise().mean();
    tr.stddev.resize(ds.dim());
    tr.constant.resize(ds.dim());
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
        const double var = (ds.features.col(j).array() - tr.mean[j]).square().sum() / n;
        const double sd = std::sqrt(var);
        tr.constant[j] = !(sd > 0.0);
        tr.stddev[j] = tr.constant[j] ? 1.0 : sd;
    }
    return apply_standardization(ds, tr);
}

namespace detail {

inline Dataset take_rows(const Dataset& ds, const std::vector<int>& idx) {
    Dataset out = ds;
    const auto n = static_cast<Eigen::Index>(idx.size());
    out.features.resize(n, ds.dim());
    out.labels.resize(n);
    if (ds.sensitive) {
        Eigen::VectorXi sens(n);
        for (Eigen::Index i = 0; i < n; ++i) sens[i] = (*ds.sensitive)[idx[i]];
        out.sensitive = std::move(sens);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        out.features.row(i) = ds.features.row(idx[i]);
        out.labels[i] = ds.labels[idx[i]];
    }
    return out;
}

// Per-class allocation of `total` draws proportional to class sizes, using
// largest remainders so the overall count is exact and deterministic.
inline std::vector<int> proportional_counts(const std::vector<std::vector<int>>& per_class, int total) {
    const int k = static_cast<int>(per_class.size());
    double pool = 0;
    for (const auto& c : per_class) pool += static_cast<double>(c.size());
    std::vector<int> counts(k);
    std::vector<std::pair<double, int>> rema(k);
    int assigned = 0;
    for (int c = 0; c < k; ++c) {
        const double exact = total * static_cast<double>(per_class[c].size()) / pool;
        counts[c] = static_cast<int>(std::floor(exact));
        counts[c] = std::min<int>(counts[c], static_cast<int>(per_class[c].size()));
        rema[c] = {exact - counts[c], c};
        assigned += counts[c];
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (int r = 0; assigned < total && r < k; ++r) {
        const int c = rema[r].second;
        if (counts[c] < static_cast<int>(per_class[c].size())) {
            ++counts[c];
            ++assigned;
        }
    }
    return counts;
}

}  // namespace detail

/// Label-stratified train/val/test split, reproducible under the seed.
/// The index partition is disjoint and covers all rows.
inline std::tuple<Dataset, Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    detail::check_dataset(ds);
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
        throw std::invalid_argument("split: test_fraction must be in (0,1)");
    if (!(spec.val_fraction_of_train > 0.0 && spec.val_fraction_of_train < 1.0))
        throw std::invalid_argument("split: val_fraction_of_train must be in (0,1)");

    const int n = static_cast<int>(ds.n());
    const int k = ds.n_classes();
    std::vector<std::vector<int>> per_class(k);
    for (int i = 0; i < n; ++i) per_class[ds.labels[i]].push_back(i);

    Rng rng(spec.seed);
    for (auto& c : per_class) rng.shuffle(c);

    const int test_total = static_cast<int>(std::llround(spec.test_fraction * n));
    const auto test_counts = detail::proportional_counts(per_class, test_total);

    std::vector<std::vector<int>> rest(k);
    std::vector<int> test_idx;
    for (int c = 0; c < k; ++c) {
        for (int r = 0; r < static_cast<int>(per_class[c].size()); ++r) {
            if (r < test_counts[c])
                test_idx.push_back(per_class[c][r]);
            else
                rest[c].push_back(per_class[c][r]);
        }
    }
    int rest_total = 0;
    for (const auto& c : rest) rest_total += static_cast<int>(c.size());
    const int val_total = static_cast<int>(std::llround(spec.val_fraction_of_train * rest_total));
    const auto val_counts = detail::proportional_counts(rest, val_total);

    std::vector<int> val_idx, train_idx;
    for (int c = 0; c < k; ++c) {
        for (int r = 0; r < static_cast<int>(rest[c].size()); ++r) {
            if (r < val_counts[c])
                val_idx.push_back(rest[c][r]);
            else
                train_idx.push_back(rest[c][r]);
        }
    }
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());

    if (test_idx.empty() || val_idx.empty() || train_idx.size() < 2)
        throw std::invalid_argument("split: degenerate split (an empty part)");
    std::vector<bool> seen(k, false);
    int classes_in_train = 0;
    for (int i : train_idx)
        if (!seen[ds.labels[i]]) {
            seen[ds.labels[i]] = true;
            ++classes_in_train;
        }
    if (classes_in_train < 2)
        throw std::invalid_argument("split: train part has fewer than 2 classes");

    return {detail::take_rows(ds, train_idx), detail::take_rows(ds, val_idx), detail::take_rows(ds, test_idx)};
}

}  // namespace spectre
