#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mexkit/attacks/config.hpp"
#include "mexkit/attacks/report.hpp"
#include "mexkit/core/metrics.hpp"
#include "mexkit/models/checkpoint.hpp"
#include "mexkit/oracle/oracle.hpp"
#include "mexkit/selection/dfal.hpp"
#include "mexkit/selection/kcenter.hpp"
#include "mexkit/selection/state.hpp"

namespace mexkit::attacks {

// Evaluation-side context. The attack loops themselves talk to the target
// exclusively through oracle::query; the raw target here is only used to
// score the finished substitute (and to resolve transfer-learning
// surrogates for substitute builds).
struct EvalContext {
  const models::Classifier* target = nullptr;
  const core::LabeledDataset* test = nullptr;
  long long target_train_size = 0;
  const core::LabeledDataset* surrogate_train = nullptr;
  const core::LabeledDataset* surrogate_val = nullptr;
};

namespace detail {

// Training set accumulated across rounds; holds pool items and crafted
// images alike.
class TrainBuffer {
 public:
  TrainBuffer(int dim, long long capacity)
      : images_(dim, static_cast<Eigen::Index>(capacity)) {}

  void add(const Eigen::Ref<const models::Vec>& img, int label) {
    require(count_ < images_.cols(), "train buffer: capacity exceeded");
    images_.col(count_) = img;
    labels_.push_back(label);
    ++count_;
  }

  int size() const { return static_cast<int>(count_); }

  core::LabeledDataset as_dataset(const core::ImageShape& shape,
                                  int class_count,
                                  const std::string& name) const {
    return core::LabeledDataset(name, shape, images_.leftCols(count_), labels_,
                                core::DatasetRole::kAttackerPool, class_count);
  }

 private:
  Eigen::MatrixXf images_;
  Eigen::Index count_ = 0;
  std::vector<int> labels_;
};

// Retraining from scratch each round: fresh weights under a seed derived
// from (attack seed, recipe seed, round index), then the usual fit.
inline models::Classifier retrain(const AttackConfig& config,
                                  const EvalContext& ctx,
                                  const TrainBuffer& buffer,
                                  const core::LabeledDataset& pool,
                                  const core::LabeledDataset& val, int round,
                                  double* val_accuracy) {
  models::TrainingRecipe recipe = config.substitute_recipe;
  recipe.rng_seed = mix_seed(mix_seed(config.rng_seed, recipe.rng_seed),
                             static_cast<std::uint64_t>(round));
  auto model = models::build(config.substitute_arch, recipe,
                             pool.class_count(), ctx.surrogate_train,
                             ctx.surrogate_val);
  auto data = buffer.as_dataset(pool.shape(), pool.class_count(),
                                "attacker-set-r" + std::to_string(round));
  auto result = models::train(std::move(model), data, val, recipe);
  if (val_accuracy != nullptr) *val_accuracy = result.val_accuracy;
  return std::move(result.classifier);
}

// Near-equal random partition of the unqueried pool remainder; round i
// draws from chunk (i-1) mod sub_pool_count.
inline std::vector<std::vector<int>> partition_subpools(
    std::vector<int> remainder, int sub_pools, std::mt19937_64& rng) {
  std::shuffle(remainder.begin(), remainder.end(), rng);
  std::vector<std::vector<int>> chunks(static_cast<std::size_t>(sub_pools));
  const int base = static_cast<int>(remainder.size()) / sub_pools;
  const int extra = static_cast<int>(remainder.size()) % sub_pools;
  std::size_t pos = 0;
  for (int c = 0; c < sub_pools; ++c) {
    const int take = base + (c < extra ? 1 : 0);
    auto& chunk = chunks[static_cast<std::size_t>(c)];
    chunk.assign(remainder.begin() + static_cast<std::ptrdiff_t>(pos),
                 remainder.begin() + static_cast<std::ptrdiff_t>(pos) + take);
    pos += static_cast<std::size_t>(take);
  }
  return chunks;
}

inline void remove_values(std::vector<int>& chunk,
                          const std::vector<int>& values) {
  for (int v : values)
    chunk.erase(std::remove(chunk.begin(), chunk.end(), v), chunk.end());
}

inline void hash_indices(Fnv1a& h, const std::vector<int>& idx) {
  for (int v : idx) h.update_value(v);
}
inline void hash_labels(Fnv1a& h, const std::vector<int>& labels) {
  for (int v : labels) h.update_value(v);
}
inline void hash_image(Fnv1a& h, const Eigen::Ref<const models::Vec>& img) {
  h.update(img.data(), static_cast<std::size_t>(img.size()) * sizeof(float));
}

inline AttackReport assemble_report(const AttackConfig& config,
                                    const EvalContext& ctx,
                                    oracle::Oracle& oracle,
                                    models::Classifier substitute,
                                    const core::LabeledDataset& val,
                                    std::vector<double> round_val_accuracy,
                                    Fnv1a trace,
                                    std::vector<std::string> log) {
  require(ctx.target != nullptr && ctx.test != nullptr,
          "attack: evaluation context incomplete");
  const auto ledger = oracle.ledger_snapshot();
  if (ledger.used() != config.budget)
    throw Error("attack: ledger.used != q on completion (" +
                std::to_string(ledger.used()) + " vs " +
                std::to_string(config.budget) + ")");

  AttackReport report;
  report.config_digest = config.digest();
  report.queries_used = ledger.used();
  report.ledger_trace = ledger.round_tallies();
  report.round_val_accuracy = std::move(round_val_accuracy);
  report.log = std::move(log);
  report.selection_trace_digest = trace.digest();

  const auto sub_val = substitute.predict_labels(val);
  const auto tgt_val = ctx.target->predict_labels(val);
  report.validation = core::evaluate_bundle(sub_val, tgt_val, val,
                                            ledger.used(),
                                            ctx.target_train_size);
  const auto sub_test = substitute.predict_labels(*ctx.test);
  const auto tgt_test = ctx.target->predict_labels(*ctx.test);
  report.test = core::evaluate_bundle(sub_test, tgt_test, *ctx.test,
                                      ledger.used(), ctx.target_train_size);
  report.substitute = std::move(substitute);
  return report;
}

}  // namespace detail

// Baseline: query a uniform sample of the pool once, train once.
inline AttackReport random_attack(oracle::Oracle& oracle,
                                  const core::LabeledDataset& pool,
                                  const core::LabeledDataset& val,
                                  const AttackConfig& config,
                                  const EvalContext& ctx) {
  config.validate(pool.size());
  auto rng = make_rng(config.rng_seed, fnv1a("random-attack"));
  const auto chosen = sample_without_replacement(
      pool.size(), static_cast<int>(config.budget), rng);

  const auto picked = pool.subset(chosen, "random-query-set");
  const auto labels = oracle.query(picked);

  Fnv1a trace;
  detail::hash_indices(trace, chosen);
  detail::hash_labels(trace, labels.labels);

  detail::TrainBuffer buffer(pool.shape().size(), config.budget);
  for (int i = 0; i < picked.size(); ++i)
    buffer.add(picked.image(i), labels.labels[static_cast<std::size_t>(i)]);

  std::vector<double> round_val;
  double acc = 0.0;
  auto substitute =
      detail::retrain(config, ctx, buffer, pool, val, /*round=*/0, &acc);
  round_val.push_back(acc);
  return detail::assemble_report(config, ctx, oracle, std::move(substitute),
                                 val, std::move(round_val), trace, {});
}

namespace detail {

enum class RoundMode { kActiveLearning, kAugmentation, kActiveAugmentation };

// Shared skeleton of the three iterative strategies (Appendix-style loop:
// seed, then r rounds of select/craft, query, accumulate, retrain from
// scratch).
inline AttackReport iterative_attack(oracle::Oracle& oracle,
                                     const core::LabeledDataset& pool,
                                     const core::LabeledDataset& val,
                                     const AttackConfig& config,
                                     const EvalContext& ctx, RoundMode mode) {
  config.validate(pool.size());
  auto rng = make_rng(config.rng_seed, fnv1a("iterative-attack"));
  const int k = config.per_round();
  const int spc = config.effective_sub_pools();

  Fnv1a trace;
  std::vector<std::string> log;
  std::vector<double> round_val;
  detail::TrainBuffer buffer(pool.shape().size(), config.budget);

  selection::SelectionState state;
  state.seed_indices = sample_without_replacement(
      pool.size(), config.seed_size, rng);

  const auto seed_set = pool.subset(state.seed_indices, "seed-set");
  const auto y0 = oracle.query(seed_set);
  state.oracle_labels = y0.labels;
  for (int i = 0; i < seed_set.size(); ++i)
    buffer.add(seed_set.image(i), y0.labels[static_cast<std::size_t>(i)]);
  detail::hash_indices(trace, state.seed_indices);
  detail::hash_labels(trace, y0.labels);

  double acc = 0.0;
  auto substitute =
      detail::retrain(config, ctx, buffer, pool, val, /*round=*/0, &acc);
  round_val.push_back(acc);

  // remainder of the pool, split into sub-pools
  std::vector<int> remainder;
  {
    std::vector<char> in_seed(static_cast<std::size_t>(pool.size()), 0);
    for (int i : state.seed_indices) in_seed[static_cast<std::size_t>(i)] = 1;
    for (int i = 0; i < pool.size(); ++i)
      if (!in_seed[static_cast<std::size_t>(i)]) remainder.push_back(i);
  }
  auto chunks = detail::partition_subpools(std::move(remainder), spc, rng);

  auto embed_fn = [&](int idx) { return substitute.embed_one(pool.image(idx)); };

  for (int round = 1; round <= config.rounds; ++round) {
    const int chunk_id = (round - 1) % spc;
    auto& chunk = chunks[static_cast<std::size_t>(chunk_id)];
    state.pool_remaining = chunk;
    state.round = round;
    state.check(pool.size());

    // candidate universe for this round; borrows from later sub-pools only
    // if this one cannot cover the round's draw at all
    const int clean_needed = mode == RoundMode::kActiveLearning ? k : k / 2;
    std::vector<int> borrowed;
    if (static_cast<int>(chunk.size()) < clean_needed) {
      log.push_back("round " + std::to_string(round) +
                    ": sub-pool short of " + std::to_string(clean_needed) +
                    " samples, borrowing from later sub-pools");
      for (int c = 0; c < spc && static_cast<int>(chunk.size()) +
                                         static_cast<int>(borrowed.size()) <
                                     clean_needed;
           ++c) {
        if (c == chunk_id) continue;
        auto& other = chunks[static_cast<std::size_t>(c)];
        while (!other.empty() && static_cast<int>(chunk.size()) +
                                         static_cast<int>(borrowed.size()) <
                                     clean_needed) {
          borrowed.push_back(other.back());
          other.pop_back();
        }
      }
      require(static_cast<int>(chunk.size() + borrowed.size()) >= clean_needed,
              "attack: pool exhausted mid-round");
      chunk.insert(chunk.end(), borrowed.begin(), borrowed.end());
    }

    // pool items acquired this round, each mapped to its query-batch slot
    std::vector<std::pair<int, int>> acquired;
    Eigen::MatrixXf query_batch(pool.shape().size(), k);
    int slot = 0;

    auto draw_clean = [&]() {
      require(!chunk.empty(), "attack: no clean sample available");
      std::uniform_int_distribution<std::size_t> pick(0, chunk.size() - 1);
      const std::size_t at = pick(rng);
      const int idx = chunk[at];
      chunk.erase(chunk.begin() + static_cast<std::ptrdiff_t>(at));
      return idx;
    };

    auto craft_into_slot = [&](int clean_idx) {
      // adversarial counterpart for one clean pick; on crafting failure a
      // fresh clean sample takes the slot (logged), keeping the round at k
      try {
        auto res = selection::deepfool(substitute, pool.image(clean_idx),
                                       config.deepfool);
        query_batch.col(slot++) = res.adversarial_input;
      } catch (const CraftingFailed&) {
        log.push_back("round " + std::to_string(round) +
                      ": crafting failed for pool index " +
                      std::to_string(clean_idx) + ", clean replacement drawn");
        const int repl = draw_clean();
        acquired.emplace_back(repl, slot);
        query_batch.col(slot++) = pool.image(repl);
      }
    };

    std::vector<int> chosen_clean;
    if (mode == RoundMode::kActiveLearning) {
      // DFAL on the sub-pool (all of it when it holds fewer than 2k), then
      // the k-center prune down to k
      const int want = std::min<int>(2 * k, static_cast<int>(chunk.size()));
      if (want < 2 * k)
        log.push_back("round " + std::to_string(round) +
                      ": sub-pool below 2k, ranking all " +
                      std::to_string(want) + " remaining candidates");
      auto ranked = selection::dfal_rank(substitute, pool, chunk, want,
                                         config.deepfool);
      chosen_clean = selection::k_center_select(embed_fn, state.seed_indices,
                                                ranked, k);
      detail::remove_values(chunk, chosen_clean);
      for (int idx : chosen_clean) {
        acquired.emplace_back(idx, slot);
        query_batch.col(slot++) = pool.image(idx);
      }
    } else if (mode == RoundMode::kAugmentation) {
      // k/2 random clean picks, each augmented with its Deepfool twin
      for (int j = 0; j < k / 2; ++j) {
        const int idx = draw_clean();
        chosen_clean.push_back(idx);
        acquired.emplace_back(idx, slot);
        query_batch.col(slot++) = pool.image(idx);
      }
      for (int idx : chosen_clean) craft_into_slot(idx);
    } else {
      // DFAL narrows to k candidates, k-center keeps k/2, Deepfool doubles
      const int want = std::min<int>(k, static_cast<int>(chunk.size()));
      if (want < k)
        log.push_back("round " + std::to_string(round) +
                      ": sub-pool below k, ranking all " +
                      std::to_string(want) + " remaining candidates");
      auto ranked = selection::dfal_rank(substitute, pool, chunk, want,
                                         config.deepfool);
      chosen_clean = selection::k_center_select(embed_fn, state.seed_indices,
                                                ranked, k / 2);
      detail::remove_values(chunk, chosen_clean);
      for (int idx : chosen_clean) {
        acquired.emplace_back(idx, slot);
        query_batch.col(slot++) = pool.image(idx);
      }
      for (int idx : chosen_clean) craft_into_slot(idx);
    }

    require(slot == k, "attack: round batch size mismatch");

    const auto labels = oracle.query(query_batch);
    for (const auto& [idx, at] : acquired) {
      trace.update_value(idx);
      trace.update_value(at);
    }
    for (Eigen::Index cidx = 0; cidx < query_batch.cols(); ++cidx)
      detail::hash_image(trace, query_batch.col(cidx));
    detail::hash_labels(trace, labels.labels);

    for (int j = 0; j < k; ++j)
      buffer.add(query_batch.col(j), labels.labels[static_cast<std::size_t>(j)]);
    for (const auto& [idx, at] : acquired) {
      state.seed_indices.push_back(idx);
      state.oracle_labels.push_back(
          labels.labels[static_cast<std::size_t>(at)]);
    }

    substitute =
        detail::retrain(config, ctx, buffer, pool, val, round, &acc);
    round_val.push_back(acc);
  }

  return detail::assemble_report(config, ctx, oracle, std::move(substitute),
                                 val, std::move(round_val), trace,
                                 std::move(log));
}

}  // namespace detail

inline AttackReport active_learning_attack(oracle::Oracle& oracle,
                                           const core::LabeledDataset& pool,
                                           const core::LabeledDataset& val,
                                           const AttackConfig& config,
                                           const EvalContext& ctx) {
  return detail::iterative_attack(oracle, pool, val, config, ctx,
                                  detail::RoundMode::kActiveLearning);
}

inline AttackReport adversarial_augmentation_attack(
    oracle::Oracle& oracle, const core::LabeledDataset& pool,
    const core::LabeledDataset& val, const AttackConfig& config,
    const EvalContext& ctx) {
  return detail::iterative_attack(oracle, pool, val, config, ctx,
                                  detail::RoundMode::kAugmentation);
}

inline AttackReport active_adversarial_augmentation_attack(
    oracle::Oracle& oracle, const core::LabeledDataset& pool,
    const core::LabeledDataset& val, const AttackConfig& config,
    const EvalContext& ctx) {
  return detail::iterative_attack(oracle, pool, val, config, ctx,
                                  detail::RoundMode::kActiveAugmentation);
}

inline AttackReport run_attack(oracle::Oracle& oracle,
                               const core::LabeledDataset& pool,
                               const core::LabeledDataset& val,
                               const AttackConfig& config,
                               const EvalContext& ctx) {
  switch (config.strategy) {
    case Strategy::kRandom:
      return random_attack(oracle, pool, val, config, ctx);
    case Strategy::kActiveLearning:
      return active_learning_attack(oracle, pool, val, config, ctx);
    case Strategy::kAdversarialAugmentation:
      return adversarial_augmentation_attack(oracle, pool, val, config, ctx);
    case Strategy::kActiveAdversarialAugmentation:
      return active_adversarial_augmentation_attack(oracle, pool, val, config,
                                                    ctx);
  }
  throw ConfigError("run_attack: bad strategy");
}

// Fraction of Deepfool examples crafted on the substitute (for up to n probe
// samples that both models classify correctly) that also change the
// target's label.
inline double transferability(const models::Classifier& substitute,
                              const models::Classifier& target,
                              const core::LabeledDataset& probe, int n,
                              const selection::DeepfoolParams& params = {},
                              std::vector<std::string>* log = nullptr) {
  require(n > 0, "transferability: n must be positive");
  require(n <= probe.size(), "transferability: n exceeds probe size");

  int crafted = 0, transferred = 0;
  for (int i = 0; i < probe.size() && crafted < n; ++i) {
    const int truth = probe.label(i);
    if (substitute.predict_one(probe.image(i)) != truth) continue;
    const int tgt_clean = target.predict_one(probe.image(i));
    if (tgt_clean != truth) continue;
    try {
      auto res = selection::deepfool(substitute, probe.image(i), params);
      ++crafted;
      if (target.predict_one(res.adversarial_input) != tgt_clean)
        ++transferred;
    } catch (const CraftingFailed&) {
      if (log != nullptr)
        log->push_back("transferability: crafting failed for probe index " +
                       std::to_string(i));
    }
  }
  if (crafted == 0)
    throw InvalidArgument(
        "transferability: no jointly correct probe samples craftable");
  if (crafted < n && log != nullptr)
    log->push_back("transferability: only " + std::to_string(crafted) +
                   " of " + std::to_string(n) + " samples were available");
  return static_cast<double>(transferred) / crafted;
}

}  // namespace mexkit::attacks
