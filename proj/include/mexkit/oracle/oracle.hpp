#pragma once

#include <mutex>
#include <ostream>

#include "mexkit/core/dataset.hpp"
#include "mexkit/models/classifier.hpp"
#include "mexkit/oracle/defense.hpp"
#include "mexkit/oracle/ledger.hpp"

namespace mexkit::oracle {

// The attacker's only interface to the target: inputs in, top-1 labels out,
// every input charged against the budget. Nothing on this surface exposes
// scores, gradients, or embeddings of the target. The ledger is a
// serialization point; concurrent query() calls observe atomic increments.
class Oracle {
 public:
  Oracle(const models::Classifier& target, long long budget,
         DefenseSpec defense = {})
      : target_(&target), defense_(defense), ledger_(budget) {
    require(target.trained(), "oracle: target must be trained");
  }

  core::PredictionVector query(const Eigen::MatrixXf& inputs) {
    require(inputs.cols() > 0, "oracle: empty query batch");
    require(inputs.rows() == target_->input_dim(),
            "oracle: input shape mismatch");
    std::lock_guard<std::mutex> lock(mu_);
    ledger_.charge_batch(inputs.cols());  // throws before any labels leak
    core::PredictionVector out;
    out.source = "oracle";
    out.labels.resize(static_cast<std::size_t>(inputs.cols()));
    for (Eigen::Index i = 0; i < inputs.cols(); ++i)
      out.labels[static_cast<std::size_t>(i)] =
          defended_label(*target_, defense_, inputs.col(i));
    return out;
  }

  core::PredictionVector query(const core::LabeledDataset& ds) {
    return query(ds.images());
  }

  long long budget() const { return ledger_.budget(); }
  long long used() const {
    std::lock_guard<std::mutex> lock(mu_);
    return ledger_.used();
  }
  QueryLedger ledger_snapshot() const {
    std::lock_guard<std::mutex> lock(mu_);
    return ledger_;
  }
  const DefenseSpec& defense() const { return defense_; }
  int class_count() const { return target_->class_count(); }

  void export_query_log(std::ostream& os) const {
    std::lock_guard<std::mutex> lock(mu_);
    ledger_.export_log(os);
  }

  // Defender-side operation: calibrates against this oracle's own target and
  // installs the result. Calibration queries never charge the ledger.
  DefenseSpec calibrate_defense(DefenseKind kind,
                                const core::LabeledDataset& probe,
                                double target_flip, std::uint64_t rng_seed) {
    auto spec = mexkit::oracle::calibrate_defense(*target_, kind, probe,
                                                  target_flip, rng_seed);
    defense_ = spec;
    return spec;
  }

 private:
  const models::Classifier* target_;
  DefenseSpec defense_;
  QueryLedger ledger_;
  mutable std::mutex mu_;
};

}  // namespace mexkit::oracle
