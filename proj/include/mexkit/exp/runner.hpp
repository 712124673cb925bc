#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <thread>

#include "mexkit/attacks/attacks.hpp"
#include "mexkit/exp/data_gen.hpp"
#include "mexkit/exp/matrix.hpp"
#include "mexkit/exp/records.hpp"

namespace mexkit::exp {

struct RunOptions {
  bool resume = false;
  int workers = 1;
  std::string output_dir;  // overrides the matrix field when non-empty
  bool write_query_logs = true;
  bool verbose = false;
};

// Everything the matrix's cells share: generated datasets and the trained
// (cached) target models.
struct Workspace {
  core::LabeledDataset target_train;
  core::LabeledDataset target_validation;
  core::LabeledDataset test;
  std::vector<core::LabeledDataset> pools;        // aligned to matrix.tiers
  std::vector<core::LabeledDataset> validations;  // aligned to matrix.tiers
  std::optional<core::LabeledDataset> surrogate_train;
  std::optional<core::LabeledDataset> surrogate_validation;
  std::vector<models::Classifier> targets;  // aligned to matrix.targets
  std::vector<double> target_test_accuracy;
};

namespace detail {

inline bool any_transfer(const ExperimentMatrix& m) {
  for (const auto& t : m.targets)
    if (t.recipe.init == models::InitStrategy::kTransfer) return true;
  for (const auto& s : m.substitutes)
    if (s.recipe.init == models::InitStrategy::kTransfer) return true;
  return false;
}

inline std::filesystem::path target_cache_path(const ExperimentMatrix& m,
                                               const ModelSpecEntry& t) {
  Fnv1a h;
  h.update(m.corpus_digest());
  h.update(t.name);
  h.update(to_string(t.arch.family));
  h.update(t.recipe.digest());
  return models::cache_root() / "targets" / (h.hex() + ".ckpt");
}

}  // namespace detail

inline Workspace prepare_workspace(const ExperimentMatrix& m,
                                   bool verbose = false) {
  Workspace ws{
      make_dataset(m.corpus.spec, DataTier::kOriginal,
                   core::DatasetRole::kTargetTrain, m.corpus.target_train,
                   "target-train"),
      make_dataset(m.corpus.spec, DataTier::kOriginal,
                   core::DatasetRole::kTest, m.corpus.target_validation,
                   "target-validation"),
      make_dataset(m.corpus.spec, DataTier::kOriginal,
                   core::DatasetRole::kTest, m.corpus.test, "test"),
      {},
      {},
      std::nullopt,
      std::nullopt,
      {},
      {}};

  for (auto tier : m.tiers) {
    ws.pools.push_back(make_dataset(m.corpus.spec, tier,
                                    core::DatasetRole::kAttackerPool,
                                    m.corpus.pool, "pool"));
    ws.validations.push_back(make_dataset(m.corpus.spec, tier,
                                          core::DatasetRole::kAttackerValidation,
                                          m.corpus.validation, "validation"));
  }
  if (detail::any_transfer(m)) {
    ws.surrogate_train = make_pretrain_dataset(
        m.corpus.spec, core::DatasetRole::kTargetTrain,
        m.corpus.surrogate_train, "surrogate-train");
    ws.surrogate_validation = make_pretrain_dataset(
        m.corpus.spec, core::DatasetRole::kAttackerValidation,
        m.corpus.surrogate_validation, "surrogate-validation");
  }

  for (const auto& t : m.targets) {
    const auto path = detail::target_cache_path(m, t);
    models::Classifier trained;
    if (std::filesystem::exists(path)) {
      trained = models::load_checkpoint(path);
    } else {
      auto model = models::build(
          t.arch, t.recipe, m.corpus.spec.class_count,
          ws.surrogate_train ? &*ws.surrogate_train : nullptr,
          ws.surrogate_validation ? &*ws.surrogate_validation : nullptr);
      trained = models::train(std::move(model), ws.target_train,
                              ws.target_validation, t.recipe)
                    .classifier;
      models::save_checkpoint(path, trained);
    }
    const double acc =
        core::accuracy(trained.predict_labels(ws.test), ws.test);
    if (verbose)
      std::fprintf(stderr, "[mexkit] target %s ready, test accuracy %.4f\n",
                   t.name.c_str(), acc);
    ws.target_test_accuracy.push_back(acc);
    ws.targets.push_back(std::move(trained));
  }
  return ws;
}

namespace detail {

// The (s, r) grid from validation-based tuning: seed fraction 0.1 and 0.2
// of the budget crossed with 4 and 9 rounds, scored by attacker validation
// accuracy.
inline std::vector<std::pair<double, int>> tuning_grid() {
  return {{0.1, 4}, {0.1, 9}, {0.2, 4}, {0.2, 9}};
}

inline attacks::AttackReport execute_cell(const ExperimentMatrix& m,
                                          const Workspace& ws,
                                          const ExperimentMatrix::Cell& cell,
                                          std::string* tuning_note) {
  const auto& target = ws.targets[static_cast<std::size_t>(cell.target)];
  const auto& pool = ws.pools[static_cast<std::size_t>(cell.tier)];
  const auto& val = ws.validations[static_cast<std::size_t>(cell.tier)];

  attacks::EvalContext ctx;
  ctx.target = &target;
  ctx.test = &ws.test;
  ctx.target_train_size = ws.target_train.size();
  ctx.surrogate_train = ws.surrogate_train ? &*ws.surrogate_train : nullptr;
  ctx.surrogate_val =
      ws.surrogate_validation ? &*ws.surrogate_validation : nullptr;

  auto cfg = m.cell_config(cell);
  attacks::AttackReport report;
  if (!m.attack.tune || !attacks::uses_rounds(cfg.strategy)) {
    oracle::Oracle orc(target, cfg.budget);
    report = attacks::run_attack(orc, pool, val, cfg, ctx);
  } else {
    // validation-scored grid; ties keep the earlier grid entry
    std::optional<attacks::AttackReport> best;
    std::pair<double, int> best_point{0.0, 0};
    for (const auto& [frac, rounds] : tuning_grid()) {
      attacks::AttackConfig trial = cfg;
      trial.rounds = rounds;
      trial.seed_size = attacks::adjust_seed_size(
          trial.budget, static_cast<int>(trial.budget * frac + 0.5), rounds,
          attacks::uses_augmentation(trial.strategy));
      oracle::Oracle orc(target, trial.budget);
      auto trial_report = attacks::run_attack(orc, pool, val, trial, ctx);
      if (!best ||
          trial_report.validation.accuracy > best->validation.accuracy) {
        best = std::move(trial_report);
        best_point = {frac, rounds};
      }
    }
    if (tuning_note != nullptr)
      *tuning_note = "tuned seed_fraction=" + std::to_string(best_point.first) +
                     " rounds=" + std::to_string(best_point.second);
    report = std::move(*best);
  }

  if (m.attack.transferability_probes > 0) {
    try {
      report.test.transferability = attacks::transferability(
          report.substitute, target, ws.test,
          std::min(m.attack.transferability_probes, ws.test.size()),
          m.attack.deepfool);
    } catch (const InvalidArgument&) {
      report.log.push_back(
          "transferability: no jointly correct probe samples, skipped");
    }
  }
  return report;
}

}  // namespace detail

inline std::vector<RunRecord> run_matrix(const ExperimentMatrix& m,
                                         const RunOptions& opts) {
  const std::filesystem::path out_dir =
      opts.output_dir.empty() ? m.output_dir : opts.output_dir;
  RecordStore store(out_dir);

  const auto ws = prepare_workspace(m, opts.verbose);
  auto cells = m.expand();

  // resume: drop cells that already have a completed record
  std::map<std::string, int> done_versions = store.versions();
  std::map<std::string, bool> completed;
  for (const auto& r : store.load_all())
    if (r.status == "completed") completed[r.cell_digest] = true;

  struct Job {
    ExperimentMatrix::Cell cell;
    std::string digest;
    int version;
  };
  std::vector<Job> jobs;
  for (const auto& cell : cells) {
    const auto digest = m.cell_digest(cell);
    if (opts.resume && completed.count(digest)) continue;
    const auto it = done_versions.find(digest);
    jobs.push_back({cell, digest, it == done_versions.end() ? 1 : it->second + 1});
  }

  std::vector<RunRecord> produced(jobs.size());
  std::atomic<std::size_t> next{0};
  const int workers =
      std::max(1, std::min<int>(opts.workers, static_cast<int>(jobs.size())));

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const auto& job = jobs[i];
      const auto& cell = job.cell;

      RunRecord rec;
      rec.target = m.targets[static_cast<std::size_t>(cell.target)].name;
      rec.target_init = to_string(
          m.targets[static_cast<std::size_t>(cell.target)].recipe.init);
      rec.tier = to_string(m.tiers[static_cast<std::size_t>(cell.tier)]);
      rec.budget = m.budgets[static_cast<std::size_t>(cell.budget)];
      rec.strategy =
          to_string(m.strategies[static_cast<std::size_t>(cell.strategy)]);
      rec.substitute =
          m.substitutes[static_cast<std::size_t>(cell.substitute)].name;
      rec.substitute_init = to_string(
          m.substitutes[static_cast<std::size_t>(cell.substitute)].recipe.init);
      rec.attack_seed = m.seeds[static_cast<std::size_t>(cell.seed)];
      rec.cell_digest = job.digest;
      rec.version = job.version;

      const auto start = std::chrono::steady_clock::now();
      try {
        std::string tuning_note;
        auto report = detail::execute_cell(m, ws, cell, &tuning_note);
        rec.status = "completed";
        rec.config_digest = report.config_digest;
        rec.queries_used = report.queries_used;
        rec.ledger_trace = report.ledger_trace;
        rec.round_val_accuracy = report.round_val_accuracy;
        {
          Fnv1a h;
          h.update_value(report.selection_trace_digest);
          rec.selection_trace_digest = h.hex();
        }
        rec.attack_log = report.log;
        if (!tuning_note.empty()) rec.attack_log.push_back(tuning_note);
        rec.validation = report.validation;
        rec.test = report.test;

        if (opts.write_query_logs) {
          const auto qdir = store.directory() / "qlogs";
          std::filesystem::create_directories(qdir);
          std::ofstream qlog(qdir / (job.digest + ".v" +
                                     std::to_string(job.version) + ".qlog"));
          long long cum = 0;
          for (std::size_t t = 0; t < report.ledger_trace.size(); ++t) {
            cum += report.ledger_trace[t];
            qlog << t << "," << report.ledger_trace[t] << "," << cum << "\n";
          }
        }
      } catch (const std::exception& e) {
        rec.status = "failed";
        rec.error = e.what();
      }
      rec.duration_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        start)
              .count();
      store.append(rec);
      if (opts.verbose)
        std::fprintf(stderr, "[mexkit] %s %s/%s/%lld/%s/%s seed=%llu (%.1fs)\n",
                     rec.status.c_str(), rec.target.c_str(), rec.tier.c_str(),
                     static_cast<long long>(rec.budget), rec.strategy.c_str(),
                     rec.substitute.c_str(),
                     static_cast<unsigned long long>(rec.attack_seed),
                     rec.duration_seconds);
      produced[i] = std::move(rec);
    }
  };

  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  return produced;
}

}  // namespace mexkit::exp
