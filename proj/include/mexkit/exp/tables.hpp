#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "mexkit/core/metrics.hpp"
#include "mexkit/exp/records.hpp"

namespace mexkit::exp {

enum class Factor {
  kTargetPerformance,
  kSubstituteArchitecture,
  kTrainingStrategy,
  kDataQuality,
  kQueryOptimisation,
};

inline const char* to_string(Factor f) {
  switch (f) {
    case Factor::kTargetPerformance: return "target-performance";
    case Factor::kSubstituteArchitecture: return "substitute-architecture";
    case Factor::kTrainingStrategy: return "training-strategy";
    case Factor::kDataQuality: return "data-quality";
    case Factor::kQueryOptimisation: return "query-optimisation";
  }
  return "?";
}

inline Factor factor_from_string(const std::string& s) {
  if (s == "target-performance") return Factor::kTargetPerformance;
  if (s == "substitute-architecture") return Factor::kSubstituteArchitecture;
  if (s == "training-strategy") return Factor::kTrainingStrategy;
  if (s == "data-quality") return Factor::kDataQuality;
  if (s == "query-optimisation") return Factor::kQueryOptimisation;
  throw ConfigError("unknown factor: " + s);
}

struct TableDoc {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::string pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", core::to_percent(fraction));
  return buf;
}

inline std::string signed_pp(double delta_pp) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.2f%%", delta_pp);
  return buf;
}

// Seed-averaged view of one (target, tier, budget, strategy, substitute)
// cell.
struct CellStats {
  std::string target, target_init, tier, strategy, substitute, substitute_init;
  long long budget = 0;
  int n = 0;
  double val_acc = 0, val_fid = 0;
  double acc = 0, fid = 0, joint = 0, tacc = 0, cpa = 0, ipa = 0;
};

inline std::map<std::string, CellStats> aggregate(
    const std::vector<RunRecord>& records) {
  std::map<std::string, CellStats> cells;
  for (const auto& r : records) {
    const std::string key = r.target + "\x1f" + r.tier + "\x1f" +
                            std::to_string(r.budget) + "\x1f" + r.strategy +
                            "\x1f" + r.substitute;
    auto& c = cells[key];
    if (c.n == 0) {
      c.target = r.target;
      c.target_init = r.target_init;
      c.tier = r.tier;
      c.strategy = r.strategy;
      c.substitute = r.substitute;
      c.substitute_init = r.substitute_init;
      c.budget = r.budget;
    }
    ++c.n;
    c.val_acc += r.validation.accuracy;
    c.val_fid += r.validation.fidelity;
    c.acc += r.test.accuracy;
    c.fid += r.test.fidelity;
    c.joint += r.test.joint_accuracy;
    c.tacc += r.test.target_accuracy;
    c.cpa += r.test.correct_pred_accuracy;
    c.ipa += r.test.incorrect_pred_accuracy;
  }
  for (auto& [_, c] : cells) {
    c.val_acc /= c.n;
    c.val_fid /= c.n;
    c.acc /= c.n;
    c.fid /= c.n;
    c.joint /= c.n;
    c.tacc /= c.n;
    c.cpa /= c.n;
    c.ipa /= c.n;
  }
  return cells;
}

inline std::vector<CellStats> sorted_cells(
    const std::map<std::string, CellStats>& cells) {
  std::vector<CellStats> out;
  out.reserve(cells.size());
  for (const auto& [_, c] : cells) out.push_back(c);
  std::sort(out.begin(), out.end(), [](const CellStats& a, const CellStats& b) {
    return std::tie(a.target, a.tier, a.substitute, a.strategy, a.budget) <
           std::tie(b.target, b.tier, b.substitute, b.strategy, b.budget);
  });
  return out;
}

inline long long max_budget(const std::vector<RunRecord>& records) {
  long long best = 0;
  for (const auto& r : records) best = std::max(best, r.budget);
  return best;
}

}  // namespace detail

// Grouped factor-analysis tables over completed records (averaged across
// seeds). Gaps are rendered explicitly, never silently dropped.
inline TableDoc render_factor_table(const std::vector<RunRecord>& all_records,
                                    Factor factor) {
  const auto records = latest_completed(all_records);
  const auto cells = detail::sorted_cells(detail::aggregate(records));
  TableDoc doc;

  switch (factor) {
    case Factor::kTargetPerformance: {
      doc.title = "Substitute performance by target model (test scores)";
      doc.header = {"target",   "tier",     "substitute", "strategy",
                    "budget",   "joint_acc", "accuracy",  "fidelity",
                    "target_acc"};
      for (const auto& c : cells)
        doc.rows.push_back({c.target, c.tier, c.substitute, c.strategy,
                            std::to_string(c.budget), detail::pct(c.joint),
                            detail::pct(c.acc), detail::pct(c.fid),
                            detail::pct(c.tacc)});
      break;
    }
    case Factor::kSubstituteArchitecture: {
      doc.title = "Substitute architecture comparison (test scores)";
      doc.header = {"substitute", "target", "tier",      "strategy",
                    "budget",     "joint_acc", "accuracy", "fidelity"};
      auto rows = cells;
      std::sort(rows.begin(), rows.end(),
                [](const detail::CellStats& a, const detail::CellStats& b) {
                  return std::tie(a.substitute, a.target, a.tier, a.strategy,
                                  a.budget) < std::tie(b.substitute, b.target,
                                                       b.tier, b.strategy,
                                                       b.budget);
                });
      for (const auto& c : rows)
        doc.rows.push_back({c.substitute, c.target, c.tier, c.strategy,
                            std::to_string(c.budget), detail::pct(c.joint),
                            detail::pct(c.acc), detail::pct(c.fid)});
      break;
    }
    case Factor::kTrainingStrategy: {
      const long long mb = detail::max_budget(records);
      doc.title = "Training strategy at the maximum budget (" +
                  std::to_string(mb) + " queries)";
      doc.header = {"substitute", "sub_init",  "target",      "target_init",
                    "joint_acc",  "accuracy",  "fidelity",    "correct_preds",
                    "incorrect_preds"};
      for (const auto& c : cells) {
        if (c.budget != mb) continue;
        doc.rows.push_back({c.substitute, c.substitute_init, c.target,
                            c.target_init, detail::pct(c.joint),
                            detail::pct(c.acc), detail::pct(c.fid),
                            detail::pct(c.cpa), detail::pct(c.ipa)});
      }
      break;
    }
    case Factor::kDataQuality: {
      doc.title = "Attacker estimate vs real success (validation vs test)";
      doc.header = {"tier",    "target",  "substitute", "strategy",
                    "budget",  "val_acc", "val_fid",    "test_acc",
                    "test_fid", "estimate"};
      for (const auto& c : cells) {
        const char* direction = c.val_acc < c.acc   ? "under"
                                : c.val_acc > c.acc ? "over"
                                                    : "match";
        doc.rows.push_back({c.tier, c.target, c.substitute, c.strategy,
                            std::to_string(c.budget), detail::pct(c.val_acc),
                            detail::pct(c.val_fid), detail::pct(c.acc),
                            detail::pct(c.fid), direction});
      }
      break;
    }
    case Factor::kQueryOptimisation: {
      doc.title =
          "Query optimisation vs the random baseline (delta in parentheses)";
      doc.header = {"strategy", "target", "tier",     "substitute",
                    "budget",   "accuracy", "fidelity"};
      // index the random baselines
      std::map<std::string, const detail::CellStats*> baselines;
      for (const auto& c : cells)
        if (c.strategy == "random")
          baselines[c.target + "\x1f" + c.tier + "\x1f" +
                    std::to_string(c.budget) + "\x1f" + c.substitute] = &c;
      for (const auto& c : cells) {
        if (c.strategy == "random") continue;
        const auto it = baselines.find(c.target + "\x1f" + c.tier + "\x1f" +
                                       std::to_string(c.budget) + "\x1f" +
                                       c.substitute);
        auto with_delta = [&](double value, double base) {
          return detail::pct(value) + " (" +
                 detail::signed_pp(core::to_percent(value) -
                                   core::to_percent(base)) +
                 ")";
        };
        std::string acc_cell, fid_cell;
        if (it == baselines.end()) {
          acc_cell = detail::pct(c.acc) + " (no baseline)";
          fid_cell = detail::pct(c.fid) + " (no baseline)";
        } else {
          acc_cell = with_delta(c.acc, it->second->acc);
          fid_cell = with_delta(c.fid, it->second->fid);
        }
        doc.rows.push_back({c.strategy, c.target, c.tier, c.substitute,
                            std::to_string(c.budget), acc_cell, fid_cell});
      }
      break;
    }
  }
  return doc;
}

inline void write_text(const TableDoc& doc, std::ostream& os) {
  std::vector<std::size_t> widths(doc.header.size());
  for (std::size_t i = 0; i < doc.header.size(); ++i)
    widths[i] = doc.header[i].size();
  for (const auto& row : doc.rows)
    for (std::size_t i = 0; i < row.size(); ++i)
      widths[i] = std::max(widths[i], row[i].size());

  os << doc.title << "\n";
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << row[i];
      if (i + 1 < row.size())
        os << std::string(widths[i] - row[i].size() + 2, ' ');
    }
    os << "\n";
  };
  emit(doc.header);
  std::size_t total = 0;
  for (auto w : widths) total += w + 2;
  os << std::string(total > 2 ? total - 2 : total, '-') << "\n";
  for (const auto& row : doc.rows) emit(row);
  if (doc.rows.empty()) os << "(no matching records)\n";
}

inline void write_csv(const TableDoc& doc, std::ostream& os) {
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      os << row[i];
      if (i + 1 < row.size()) os << ",";
    }
    os << "\n";
  };
  emit(doc.header);
  for (const auto& row : doc.rows) emit(row);
}

}  // namespace mexkit::exp
