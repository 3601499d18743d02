#include "flame/model_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

namespace flame {

using nlohmann::json;

json config_to_json(const FlameConfig& config) {
    json j;
    if (config.loss_scale) {
        j["C"] = *config.loss_scale;
    } else {
        j["C"] = nullptr;
    }
    j["theta"] = config.theta;
    j["lambda"] = config.lambda;
    j["formulation"] =
        config.formulation == Formulation::NormBall ? "norm_ball" : "penalized";
    j["tolerance"] = config.tolerance;
    j["max_iterations"] = config.max_iterations;
    return j;
}

void apply_config_json(FlameConfig& config, const json& j) {
    if (j.contains("formulation")) {
        const std::string kind = j.at("formulation").get<std::string>();
        if (kind == "norm_ball") {
            config.formulation = Formulation::NormBall;
        } else if (kind == "penalized") {
            config.formulation = Formulation::Penalized;
        } else {
            throw DataError("config: unknown formulation '" + kind + "'");
        }
    }
    if (j.contains("C")) {
        if (j.at("C").is_null()) {
            config.loss_scale.reset();
        } else {
            config.loss_scale = j.at("C").get<double>();
        }
    }
    if (j.contains("theta")) config.theta = j.at("theta").get<double>();
    if (j.contains("lambda")) config.lambda = j.at("lambda").get<double>();
    if (j.contains("tolerance")) config.tolerance = j.at("tolerance").get<double>();
    if (j.contains("max_iterations")) config.max_iterations = j.at("max_iterations").get<int>();
    config.validate();
}

FlameConfig config_from_json(const json& j) {
    FlameConfig config;
    if (j.contains("formulation") && j.at("formulation").is_string() &&
        j.at("formulation").get<std::string>() == "penalized") {
        config = FlameConfig::penalized(0.0, 1.0);
    }
    apply_config_json(config, j);
    return config;
}

json model_to_json(const LinearModel& model) {
    json j;
    j["version"] = 1;
    j["d"] = model.direction.size();
    j["omega"] = std::vector<double>(model.direction.data(),
                                     model.direction.data() + model.direction.size());
    j["beta"] = model.intercept;
    j["config"] = config_to_json(model.config);
    return j;
}

LinearModel model_from_json(const json& j) {
    if (!j.contains("version") || j.at("version").get<int>() != 1) {
        throw DataError("model file: unsupported or missing version");
    }
    LinearModel model;
    const auto omega = j.at("omega").get<std::vector<double>>();
    const auto d = j.at("d").get<Eigen::Index>();
    if (static_cast<Eigen::Index>(omega.size()) != d || d < 1) {
        throw DataError("model file: omega length disagrees with d");
    }
    model.direction = Eigen::Map<const Eigen::VectorXd>(omega.data(), d);
    model.intercept = j.at("beta").get<double>();
    if (!model.direction.allFinite() || !std::isfinite(model.intercept)) {
        throw DataError("model file: non-finite coefficients");
    }
    if (j.contains("config")) model.config = config_from_json(j.at("config"));
    return model;
}

void write_text_atomic(const std::string& path, const std::string& text) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write file: " + tmp.string());
        }
        out << text;
    }
    fs::rename(tmp, target);
}

void save_model(const std::string& path, const LinearModel& model) {
    write_text_atomic(path, model_to_json(model).dump(2) + "\n");
}

LinearModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open model file: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& err) {
        throw DataError("model file is not valid JSON: " + std::string(err.what()));
    }
    return model_from_json(j);
}

}  // namespace flame
