#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spectre/dataset.hpp"
#include "spectre/errors.hpp"
#include "spectre/guarantees.hpp"
#include "spectre/mrc_core.hpp"
#include "spectre/spectral_map.hpp"
#include "spectre/tuner.hpp"

namespace spectre {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Map descriptor only: the frequency matrix is regenerated from the seed,
/// never stored.
inline json to_json(const SpectralMap& map) {
    json j;
    j["kind"] = map.kind == MapKind::fourier ? "fourier" : "polynomial";
    j["d"] = map.d;
    j["n_classes"] = map.n_classes;
    if (map.kind == MapKind::fourier) {
        j["D"] = map.D;
        j["sigma"] = map.sigma;
        j["seed"] = map.seed;
    } else {
        j["degree"] = map.degree;
    }
    return j;
}

inline SpectralMap map_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "fourier")
        return sample_map(j.at("d").get<int>(), j.at("D").get<int>(), j.at("sigma").get<double>(),
                          j.at("n_classes").get<int>(), j.at("seed").get<std::uint64_t>());
    if (kind == "polynomial")
        return polynomial_map(j.at("d").get<int>(), j.at("degree").get<int>(),
                              j.at("n_classes").get<int>());
    throw ConfigError("map_from_json: unknown kind '" + kind + "'");
}

inline json to_json(const SolverMeta& meta) {
    return json{{"iterations", meta.iterations},
                {"final_step", meta.final_step},
                {"stop_reason", meta.stop_reason},
                {"budget_exhausted", meta.budget_exhausted}};
}

inline SolverMeta solver_meta_from_json(const json& j) {
    SolverMeta m;
    m.iterations = j.at("iterations").get<int>();
    m.final_step = j.at("final_step").get<double>();
    m.stop_reason = j.at("stop_reason").get<std::string>();
    m.budget_exhausted = j.at("budget_exhausted").get<bool>();
    return m;
}

inline json to_json(const MrcModel& model) {
    json j;
    j["map"] = to_json(model.map);
    j["lambda0"] = model.lambda0;
    j["mu"] = std::vector<double>(model.mu.data(), model.mu.data() + model.mu.size());
    j["worst_case_risk"] = model.worst_case_risk;
    j["solver_meta"] = to_json(model.solver_meta);
    // decimated objective trace, enough to plot convergence
    if (!model.objective_trace.empty()) {
        const std::size_t stride = std::max<std::size_t>(1, model.objective_trace.size() / 512);
        json trace;
        trace["stride"] = stride;
        std::vector<double> values;
        for (std::size_t i = 0; i < model.objective_trace.size(); i += stride)
            values.push_back(model.objective_trace[i]);
        trace["values"] = values;
        trace["final"] = model.objective_trace.back();
        j["objective_trace"] = trace;
    }
    return j;
}

inline MrcModel model_from_json(const json& j) {
    MrcModel model;
    model.map = map_from_json(j.at("map"));
    model.lambda0 = j.at("lambda0").get<double>();
    const auto mu = j.at("mu").get<std::vector<double>>();
    model.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
    if (model.mu.size() != model.map.output_dim())
        throw ConfigError("model_from_json: coefficient length does not match the map");
    model.worst_case_risk = j.at("worst_case_risk").get<double>();
    model.solver_meta = solver_meta_from_json(j.at("solver_meta"));
    return model;
}

inline json to_json(const CandidateMetrics& m) {
    json j;
    j["accuracy"] = m.accuracy;
    j["class_errors"] = m.class_errors;  // NaN entries serialize as null
    j["worst_class_error"] = m.worst_class_error;
    return j;
}

inline json to_json(const GridRecord& r) {
    json j;
    j["stage"] = r.stage;
    j["index"] = r.index;
    j["sigma"] = r.sigma;
    j["lambda0"] = r.lambda0;
    j["ok"] = r.ok;
    if (!r.ok)
        j["error"] = r.error;
    else {
        j["metrics"] = to_json(r.metrics);
        j["worst_case_risk"] = r.worst_case_risk;
    }
    return j;
}

inline json to_json(const TuneResult& result) {
    json j;
    j["sigma_star"] = result.sigma_star;
    j["lambda0_star"] = result.lambda0_star;
    j["trainings"] = result.trainings;
    json records = json::array();
    for (const auto& r : result.grid_records) records.push_back(to_json(r));
    j["grid_records"] = records;
    j["final_model"] = to_json(result.final_model);
    return j;
}

inline json to_json(const BoundCell& c) {
    json j;
    j["param"] = c.param;
    j["value"] = c.value;
    j["group"] = c.group < 0 ? json("overall") : json(c.group);
    j["ok"] = c.ok;
    if (c.ok || c.error.empty()) {
        j["lower"] = c.lower;
        j["upper"] = c.upper;
        j["lower_status"] = c.lower_status;
        j["upper_status"] = c.upper_status;
        j["n_group"] = c.n_group;
        j["low_confidence"] = c.low_confidence;
    }
    if (!c.error.empty()) j["error"] = c.error;
    return j;
}

inline json to_json(const Standardization& tr) {
    json j;
    j["mean"] = std::vector<double>(tr.mean.data(), tr.mean.data() + tr.mean.size());
    j["stddev"] = std::vector<double>(tr.stddev.data(), tr.stddev.data() + tr.stddev.size());
    j["constant"] = tr.constant;
    return j;
}

inline Standardization standardization_from_json(const json& j) {
    Standardization tr;
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto sd = j.at("stddev").get<std::vector<double>>();
    tr.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    tr.stddev = Eigen::Map<const Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
    tr.constant = j.at("constant").get<std::vector<bool>>();
    return tr;
}

/// Everything needed to apply a trained model to fresh CSV data: the model,
/// the fitted standardization, and the column/value vocabularies.
struct ModelBundle {
    MrcModel model;
    Standardization standardization;
    std::vector<std::string> feature_names;
    std::string label_name = "y";
    std::vector<std::string> label_values;
    std::vector<std::string> sensitive_names;
    std::vector<std::string> group_values;
};

inline json to_json(const ModelBundle& b) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "mrc_model";
    j["model"] = to_json(b.model);
    j["pipeline"] = {{"standardization", to_json(b.standardization)},
                     {"feature_names", b.feature_names},
                     {"label_name", b.label_name},
                     {"label_values", b.label_values},
                     {"sensitive_names", b.sensitive_names},
                     {"group_values", b.group_values}};
    return j;
}

inline ModelBundle bundle_from_json(const json& j) {
    if (j.value("kind", "") != "mrc_model") throw ConfigError("not a model file");
    ModelBundle b;
    b.model = model_from_json(j.at("model"));
    const json& p = j.at("pipeline");
    b.standardization = standardization_from_json(p.at("standardization"));
    b.feature_names = p.at("feature_names").get<std::vector<std::string>>();
    b.label_name = p.at("label_name").get<std::string>();
    b.label_values = p.at("label_values").get<std::vector<std::string>>();
    b.sensitive_names = p.at("sensitive_names").get<std::vector<std::string>>();
    b.group_values = p.at("group_values").get<std::vector<std::string>>();
    return b;
}

/// Write-to-temp-then-rename so readers never observe a partial file.
inline void write_text_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        if (!out) throw DataError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

inline void write_json_atomic(const std::string& path, const json& j) {
    write_text_atomic(path, j.dump(2) + "\n");
}

inline json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("invalid JSON in '" + path + "': " + e.what());
    }
    return j;
}

}  // namespace spectre
