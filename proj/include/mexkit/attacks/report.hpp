#pragma once

#include <string>
#include <vector>

#include "mexkit/core/metrics.hpp"
#include "mexkit/models/classifier.hpp"

namespace mexkit::attacks {

// Outcome of one attack run. The validation and test bundles are computed
// by the same metric code path; the ledger is a snapshot of the oracle's
// accounting at completion (used == q on success).
struct AttackReport {
  models::Classifier substitute;
  core::MetricsBundle validation;
  core::MetricsBundle test;
  std::vector<double> round_val_accuracy;  // seed training first, then rounds
  std::vector<long long> ledger_trace;     // per-query-batch sizes, in order
  long long queries_used = 0;
  std::string config_digest;
  std::uint64_t selection_trace_digest = 0;  // replay fingerprint
  std::vector<std::string> log;              // fallbacks and replacements
};

}  // namespace mexkit::attacks
