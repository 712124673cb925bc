#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mexkit/exp/records.hpp"
#include "mexkit/exp/tables.hpp"

namespace mexkit::exp {

// Boolean replication checks of the factor-analysis conclusions, evaluated
// over whatever records are available. A trend whose required cells are
// missing reports not-evaluable rather than failing.
struct TrendOutcome {
  enum class State { kPass, kFail, kNotEvaluable };
  std::string id;
  std::string description;
  State state = State::kNotEvaluable;
  std::string detail;
};

inline const char* to_string(TrendOutcome::State s) {
  switch (s) {
    case TrendOutcome::State::kPass: return "pass";
    case TrendOutcome::State::kFail: return "fail";
    case TrendOutcome::State::kNotEvaluable: return "not-evaluable";
  }
  return "?";
}

namespace detail {

struct MeanCell {
  double fid = 0, acc = 0, tacc = 0;
  int n = 0;
};

}  // namespace detail

inline std::vector<TrendOutcome> check_trends(
    const std::vector<RunRecord>& all_records) {
  const auto records = latest_completed(all_records);
  std::vector<TrendOutcome> out;
  const long long mb = detail::max_budget(records);
  const std::string original = to_string(DataTier::kOriginal);

  // T1: at the max budget with original-tier data, mean fidelity ordering
  // follows the target-accuracy ordering within every (strategy, substitute)
  // group covering targets of different accuracy.
  {
    TrendOutcome t;
    t.id = "T1";
    t.description =
        "fidelity ordering follows target accuracy at the maximum budget";
    std::map<std::string, std::map<std::string, detail::MeanCell>> groups;
    for (const auto& r : records) {
      if (r.budget != mb || r.tier != original) continue;
      auto& cell = groups[r.strategy + "\x1f" + r.substitute][r.target];
      cell.fid += r.test.fidelity;
      cell.tacc += r.test.target_accuracy;
      ++cell.n;
    }
    int checked = 0, violations = 0;
    for (auto& [_, targets] : groups) {
      if (targets.size() < 2) continue;
      std::vector<detail::MeanCell> cells;
      for (auto& [__, c] : targets) {
        c.fid /= c.n;
        c.tacc /= c.n;
        cells.push_back(c);
      }
      for (std::size_t i = 0; i < cells.size(); ++i)
        for (std::size_t j = i + 1; j < cells.size(); ++j) {
          if (cells[i].tacc == cells[j].tacc) continue;
          ++checked;
          const bool follows = (cells[i].tacc > cells[j].tacc) ==
                               (cells[i].fid > cells[j].fid);
          if (!follows) ++violations;
        }
    }
    std::ostringstream d;
    d << checked << " target pairs checked, " << violations << " violations";
    t.detail = d.str();
    t.state = checked == 0 ? TrendOutcome::State::kNotEvaluable
              : violations == 0 ? TrendOutcome::State::kPass
                                : TrendOutcome::State::kFail;
    out.push_back(t);
  }

  // T2: substitutes imitate correct target predictions better than mistakes.
  {
    TrendOutcome t;
    t.id = "T2";
    t.description =
        "correct-prediction accuracy exceeds incorrect-prediction accuracy";
    int checked = 0, violations = 0;
    for (const auto& r : records) {
      if (r.test.target_accuracy <= 0.0 || r.test.target_accuracy >= 1.0)
        continue;
      ++checked;
      if (r.test.correct_pred_accuracy <= r.test.incorrect_pred_accuracy)
        ++violations;
    }
    std::ostringstream d;
    d << checked << " substitutes checked, " << violations << " violations";
    t.detail = d.str();
    t.state = checked == 0 ? TrendOutcome::State::kNotEvaluable
              : violations == 0 ? TrendOutcome::State::kPass
                                : TrendOutcome::State::kFail;
    out.push_back(t);
  }

  // T3: fidelity stays within slack of the target accuracy bound at the
  // maximum budget on original-tier data.
  {
    const double slack = 0.03;
    TrendOutcome t;
    t.id = "T3";
    t.description = "fidelity <= target accuracy + 3pp at the maximum budget";
    int checked = 0, violations = 0;
    for (const auto& r : records) {
      if (r.budget != mb || r.tier != original) continue;
      ++checked;
      if (r.test.fidelity > r.test.target_accuracy + slack) ++violations;
    }
    std::ostringstream d;
    d << checked << " records checked, " << violations << " violations";
    t.detail = d.str();
    t.state = checked == 0 ? TrendOutcome::State::kNotEvaluable
              : violations == 0 ? TrendOutcome::State::kPass
                                : TrendOutcome::State::kFail;
    out.push_back(t);
  }

  // T4: a scratch-trained substitute copies a scratch-trained target better
  // than a transfer-trained target (mean fidelity, matched cells).
  {
    TrendOutcome t;
    t.id = "T4";
    t.description =
        "scratch substitutes reach higher fidelity against scratch targets";
    std::map<std::string, std::map<std::string, detail::MeanCell>> groups;
    for (const auto& r : records) {
      if (r.substitute_init != "scratch") continue;
      auto& cell = groups[r.substitute + "\x1f" + r.tier + "\x1f" +
                          std::to_string(r.budget) + "\x1f" +
                          r.strategy][r.target_init];
      cell.fid += r.test.fidelity;
      ++cell.n;
    }
    int checked = 0, violations = 0;
    for (auto& [_, by_init] : groups) {
      auto scratch = by_init.find("scratch");
      auto transfer = by_init.find("transfer");
      if (scratch == by_init.end() || transfer == by_init.end()) continue;
      ++checked;
      if (scratch->second.fid / scratch->second.n <=
          transfer->second.fid / transfer->second.n)
        ++violations;
    }
    std::ostringstream d;
    d << checked << " matched groups, " << violations << " violations";
    t.detail = d.str();
    t.state = checked == 0 ? TrendOutcome::State::kNotEvaluable
              : violations == 0 ? TrendOutcome::State::kPass
                                : TrendOutcome::State::kFail;
    out.push_back(t);
  }

  // T5: accuracy and fidelity are non-decreasing in the budget along each
  // (target, tier, strategy, substitute, seed) line, allowing one inversion
  // per metric.
  {
    TrendOutcome t;
    t.id = "T5";
    t.description = "metrics non-decreasing in budget (one inversion allowed)";
    std::map<std::string, std::map<long long, const RunRecord*>> lines;
    for (const auto& r : records)
      lines[r.target + "\x1f" + r.tier + "\x1f" + r.strategy + "\x1f" +
            r.substitute + "\x1f" + std::to_string(r.attack_seed)][r.budget] =
          &r;
    int checked = 0, violations = 0;
    for (const auto& [_, by_budget] : lines) {
      if (by_budget.size() < 2) continue;
      ++checked;
      int acc_inv = 0, fid_inv = 0;
      const RunRecord* prev = nullptr;
      for (const auto& [__, rec] : by_budget) {  // map is budget-ordered
        if (prev != nullptr) {
          if (rec->test.accuracy < prev->test.accuracy) ++acc_inv;
          if (rec->test.fidelity < prev->test.fidelity) ++fid_inv;
        }
        prev = rec;
      }
      if (acc_inv > 1 || fid_inv > 1) ++violations;
    }
    std::ostringstream d;
    d << checked << " budget lines checked, " << violations << " violations";
    t.detail = d.str();
    t.state = checked == 0 ? TrendOutcome::State::kNotEvaluable
              : violations == 0 ? TrendOutcome::State::kPass
                                : TrendOutcome::State::kFail;
    out.push_back(t);
  }

  return out;
}

}  // namespace mexkit::exp
