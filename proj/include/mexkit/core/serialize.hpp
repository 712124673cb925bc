#pragma once

#include <nlohmann/json.hpp>

#include "mexkit/core/metrics.hpp"

namespace mexkit::core {

// Flat record for the persistence layer; field names are part of the
// on-disk contract.
inline nlohmann::json to_json(const MetricsBundle& m) {
  nlohmann::json j;
  j["accuracy"] = m.accuracy;
  j["fidelity"] = m.fidelity;
  j["joint_accuracy"] = m.joint_accuracy;
  j["target_accuracy"] = m.target_accuracy;
  j["correct_pred_accuracy"] = m.correct_pred_accuracy;
  j["incorrect_pred_accuracy"] = m.incorrect_pred_accuracy;
  j["query_score"] = m.query_score;
  j["queries_used"] = m.queries_used;
  if (m.transferability.has_value())
    j["transferability"] = *m.transferability;
  else
    j["transferability"] = nullptr;
  return j;
}

inline MetricsBundle metrics_from_json(const nlohmann::json& j) {
  MetricsBundle m;
  m.accuracy = j.at("accuracy").get<double>();
  m.fidelity = j.at("fidelity").get<double>();
  m.joint_accuracy = j.at("joint_accuracy").get<double>();
  m.target_accuracy = j.at("target_accuracy").get<double>();
  m.correct_pred_accuracy = j.at("correct_pred_accuracy").get<double>();
  m.incorrect_pred_accuracy = j.at("incorrect_pred_accuracy").get<double>();
  m.query_score = j.at("query_score").get<double>();
  m.queries_used = j.at("queries_used").get<long long>();
  if (j.contains("transferability") && !j.at("transferability").is_null())
    m.transferability = j.at("transferability").get<double>();
  return m;
}

}  // namespace mexkit::core
