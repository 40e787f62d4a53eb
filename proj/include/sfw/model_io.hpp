#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "sfw/train.hpp"

namespace sfw {

inline constexpr const char* kModelFormatVersion = "simplex-fw/1";

// Model file schema: {version, kernel: {gamma, C, add_bias},
// support: [{y, alpha, features: [[index, value], ...]}, ...],
// meta: {iterations, final_gap, converged}}. Feature indices are 1-based in
// the file, matching the LIBSVM convention.
inline nlohmann::json model_to_json(const TrainedModel& model) {
  nlohmann::json j;
  j["version"] = kModelFormatVersion;
  j["kernel"] = {{"gamma", model.kernel.gamma},
                 {"C", model.kernel.C},
                 {"add_bias", model.kernel.add_bias}};
  nlohmann::json support = nlohmann::json::array();
  for (const auto& sv : model.support) {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& f : sv.features) features.push_back({f.index + 1, f.value});
    support.push_back(
        {{"y", static_cast<int>(sv.label)}, {"alpha", sv.alpha}, {"features", std::move(features)}});
  }
  j["support"] = std::move(support);
  j["meta"] = {{"iterations", model.iterations},
               {"final_gap", model.final_gap},
               {"converged", model.converged}};
  return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  if (!j.contains("version") || j.at("version").get<std::string>() != kModelFormatVersion)
    throw std::runtime_error("unsupported model file version");
  TrainedModel model;
  const auto& kernel = j.at("kernel");
  model.kernel.gamma = kernel.at("gamma").get<double>();
  model.kernel.C = kernel.at("C").get<double>();
  model.kernel.add_bias = kernel.at("add_bias").get<bool>();
  validate(model.kernel);
  std::int32_t position = 0;
  for (const auto& entry : j.at("support")) {
    SupportVector sv;
    sv.index = position++;
    const int y = entry.at("y").get<int>();
    if (y != 1 && y != -1) throw std::runtime_error("support vector label must be -1 or +1");
    sv.label = static_cast<std::int8_t>(y);
    sv.alpha = entry.at("alpha").get<double>();
    std::int64_t prev = 0;
    for (const auto& f : entry.at("features")) {
      const auto index = f.at(0).get<std::int64_t>();
      if (index < 1 || index <= prev) throw std::runtime_error("malformed support vector features");
      prev = index;
      sv.features.push_back({static_cast<std::int32_t>(index - 1), f.at(1).get<double>()});
    }
    model.support.push_back(std::move(sv));
  }
  if (model.support.empty()) throw std::runtime_error("model has no support vectors");
  const auto& meta = j.at("meta");
  model.iterations = meta.at("iterations").get<std::int64_t>();
  model.final_gap = meta.at("final_gap").get<double>();
  model.converged = meta.at("converged").get<bool>();
  return model;
}

inline void save_model(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing model file: " + path);
}

inline TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed model file " + path + ": " + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed model file " + path + ": " + e.what());
  }
}

}  // namespace sfw
