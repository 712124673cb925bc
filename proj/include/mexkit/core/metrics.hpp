#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "mexkit/common.hpp"
#include "mexkit/core/dataset.hpp"

namespace mexkit::core {

// Evaluation suite for substitute models. All scores are fractions in [0,1];
// rendering as percentages happens at report time only. All functions are
// pure and leave no state behind, so they are safe from any thread.

// Fraction of positions where the prediction equals the dataset label.
inline double accuracy(const PredictionVector& preds,
                       const LabeledDataset& truth) {
  require(preds.size() == truth.size(), "accuracy: length mismatch");
  if (truth.size() == 0) throw InvalidArgument("accuracy: empty test set");
  int hits = 0;
  for (int i = 0; i < truth.size(); ++i)
    if (preds.labels[static_cast<std::size_t>(i)] == truth.label(i)) ++hits;
  return static_cast<double>(hits) / truth.size();
}

// Fraction of positions where substitute and target output the same label,
// counting agreements on both correct and incorrect predictions.
inline double fidelity(const PredictionVector& sub_preds,
                       const PredictionVector& tgt_preds) {
  require(sub_preds.size() == tgt_preds.size(), "fidelity: length mismatch");
  if (sub_preds.size() == 0) throw InvalidArgument("fidelity: empty test set");
  int hits = 0;
  for (int i = 0; i < sub_preds.size(); ++i)
    if (sub_preds.labels[static_cast<std::size_t>(i)] ==
        tgt_preds.labels[static_cast<std::size_t>(i)])
      ++hits;
  return static_cast<double>(hits) / sub_preds.size();
}

// Fraction of positions classified correctly by both target and substitute.
inline double joint_accuracy(const PredictionVector& sub_preds,
                             const PredictionVector& tgt_preds,
                             const LabeledDataset& truth) {
  require(sub_preds.size() == truth.size() && tgt_preds.size() == truth.size(),
          "joint_accuracy: length mismatch");
  if (truth.size() == 0)
    throw InvalidArgument("joint_accuracy: empty test set");
  int hits = 0;
  for (int i = 0; i < truth.size(); ++i) {
    const auto j = static_cast<std::size_t>(i);
    if (sub_preds.labels[j] == truth.label(i) &&
        tgt_preds.labels[j] == truth.label(i))
      ++hits;
  }
  return static_cast<double>(hits) / truth.size();
}

// Substitute accuracy restricted to samples the target classifies correctly:
// joint / target_acc.
inline double correct_pred_accuracy(double joint, double target_acc) {
  if (target_acc <= 0.0)
    throw UndefinedDecomposition(
        "correct_pred_accuracy: target accuracy is zero");
  require(target_acc <= 1.0 && joint >= 0.0 && joint <= target_acc + 1e-12,
          "correct_pred_accuracy: need 0 <= joint <= target_acc <= 1");
  return joint / target_acc;
}

// Substitute agreement restricted to samples the target gets wrong:
// (fidelity - joint) / (1 - target_acc).
inline double incorrect_pred_accuracy(double fid, double joint,
                                      double target_acc) {
  if (target_acc >= 1.0)
    throw UndefinedDecomposition(
        "incorrect_pred_accuracy: target accuracy is one");
  require(target_acc >= 0.0 && joint >= 0.0 && joint <= fid + 1e-12 &&
              fid <= 1.0,
          "incorrect_pred_accuracy: need 0 <= joint <= fidelity <= 1");
  return (fid - joint) / (1.0 - target_acc);
}

// Queries spent per sample of the target's training set.
inline double query_score(long long queries_used, long long target_train_size) {
  require(target_train_size > 0, "query_score: target train size must be > 0");
  require(queries_used >= 0, "query_score: negative query count");
  return static_cast<double>(queries_used) /
         static_cast<double>(target_train_size);
}

// All evaluation numbers for one substitute model on one evaluation set.
struct MetricsBundle {
  double accuracy = 0.0;
  double fidelity = 0.0;
  double joint_accuracy = 0.0;
  double target_accuracy = 0.0;
  double correct_pred_accuracy = 0.0;
  double incorrect_pred_accuracy = 0.0;
  double query_score = 0.0;
  long long queries_used = 0;
  std::optional<double> transferability;
};

// Computes the full bundle from aligned prediction vectors. The decomposition
// terms are left at 0 when the target accuracy makes them undefined (0 or 1).
inline MetricsBundle evaluate_bundle(const PredictionVector& sub_preds,
                                     const PredictionVector& tgt_preds,
                                     const LabeledDataset& truth,
                                     long long queries_used,
                                     long long target_train_size) {
  MetricsBundle m;
  m.accuracy = accuracy(sub_preds, truth);
  m.fidelity = fidelity(sub_preds, tgt_preds);
  m.joint_accuracy = joint_accuracy(sub_preds, tgt_preds, truth);
  m.target_accuracy = accuracy(tgt_preds, truth);
  if (m.target_accuracy > 0.0)
    m.correct_pred_accuracy =
        correct_pred_accuracy(m.joint_accuracy, m.target_accuracy);
  if (m.target_accuracy < 1.0)
    m.incorrect_pred_accuracy = incorrect_pred_accuracy(
        m.fidelity, m.joint_accuracy, m.target_accuracy);
  m.queries_used = queries_used;
  m.query_score = query_score(queries_used, target_train_size);
  return m;
}

// Percentage rendering, two decimals, rounding half away from zero.
inline double to_percent(double fraction) {
  const double scaled = fraction * 10000.0;
  const double rounded =
      scaled >= 0.0 ? std::floor(scaled + 0.5) : std::ceil(scaled - 0.5);
  return rounded / 100.0;
}

}  // namespace mexkit::core
