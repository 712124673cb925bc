#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "mexkit/attacks/report.hpp"
#include "mexkit/core/serialize.hpp"

namespace mexkit::exp {

// One matrix cell outcome. Records are append-only: a re-run of the same
// cell appends a higher version instead of overwriting.
struct RunRecord {
  // cell coordinates
  std::string target;
  std::string target_init;  // scratch | transfer
  std::string tier;
  long long budget = 0;
  std::string strategy;
  std::string substitute;
  std::string substitute_init;
  std::uint64_t attack_seed = 0;

  std::string cell_digest;
  int version = 1;
  std::string status;  // completed | failed
  std::string error;
  double duration_seconds = 0.0;
  std::string framework_version = kVersion;

  // payload (completed records)
  std::string config_digest;
  long long queries_used = 0;
  std::vector<long long> ledger_trace;
  std::vector<double> round_val_accuracy;
  std::string selection_trace_digest;
  std::vector<std::string> attack_log;
  core::MetricsBundle validation;
  core::MetricsBundle test;
};

inline nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json j;
  j["cell"] = {{"target", r.target},
               {"target_init", r.target_init},
               {"tier", r.tier},
               {"budget", r.budget},
               {"strategy", r.strategy},
               {"substitute", r.substitute},
               {"substitute_init", r.substitute_init},
               {"seed", r.attack_seed}};
  j["cell_digest"] = r.cell_digest;
  j["version"] = r.version;
  j["status"] = r.status;
  if (!r.error.empty()) j["error"] = r.error;
  j["duration_seconds"] = r.duration_seconds;
  j["framework_version"] = r.framework_version;
  if (r.status == "completed") {
    j["report"] = {{"config_digest", r.config_digest},
                   {"queries_used", r.queries_used},
                   {"ledger_trace", r.ledger_trace},
                   {"round_val_accuracy", r.round_val_accuracy},
                   {"selection_trace_digest", r.selection_trace_digest},
                   {"log", r.attack_log},
                   {"validation", core::to_json(r.validation)},
                   {"test", core::to_json(r.test)}};
  }
  return j;
}

inline RunRecord record_from_json(const nlohmann::json& j) {
  RunRecord r;
  const auto& c = j.at("cell");
  r.target = c.at("target").get<std::string>();
  r.target_init = c.value("target_init", "scratch");
  r.tier = c.at("tier").get<std::string>();
  r.budget = c.at("budget").get<long long>();
  r.strategy = c.at("strategy").get<std::string>();
  r.substitute = c.at("substitute").get<std::string>();
  r.substitute_init = c.value("substitute_init", "scratch");
  r.attack_seed = c.at("seed").get<std::uint64_t>();
  r.cell_digest = j.at("cell_digest").get<std::string>();
  r.version = j.at("version").get<int>();
  r.status = j.at("status").get<std::string>();
  r.error = j.value("error", "");
  r.duration_seconds = j.at("duration_seconds").get<double>();
  r.framework_version = j.value("framework_version", "");
  if (j.contains("report")) {
    const auto& p = j.at("report");
    r.config_digest = p.at("config_digest").get<std::string>();
    r.queries_used = p.at("queries_used").get<long long>();
    r.ledger_trace = p.at("ledger_trace").get<std::vector<long long>>();
    r.round_val_accuracy =
        p.at("round_val_accuracy").get<std::vector<double>>();
    r.selection_trace_digest =
        p.at("selection_trace_digest").get<std::string>();
    r.attack_log = p.at("log").get<std::vector<std::string>>();
    r.validation = core::metrics_from_json(p.at("validation"));
    r.test = core::metrics_from_json(p.at("test"));
  }
  return r;
}

// Line-delimited JSON store with atomic appends; readers only ever see
// whole records.
class RecordStore {
 public:
  explicit RecordStore(std::filesystem::path dir)
      : dir_(std::move(dir)), file_(dir_ / "records.jsonl") {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& directory() const { return dir_; }

  void append(const RunRecord& r) {
    const std::string line = to_json(r).dump();
    std::lock_guard<std::mutex> lock(mu_);
    std::ofstream out(file_, std::ios::app);
    if (!out) throw Error("record store: cannot open " + file_.string());
    out << line << "\n";
    out.flush();
    if (!out) throw Error("record store: append failed");
  }

  std::vector<RunRecord> load_all() const {
    std::vector<RunRecord> records;
    std::ifstream in(file_);
    if (!in) return records;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      records.push_back(record_from_json(nlohmann::json::parse(line)));
    }
    return records;
  }

  // highest version per cell digest
  std::map<std::string, int> versions() const {
    std::map<std::string, int> out;
    for (const auto& r : load_all()) {
      auto [it, inserted] = out.emplace(r.cell_digest, r.version);
      if (!inserted && r.version > it->second) it->second = r.version;
    }
    return out;
  }

 private:
  std::filesystem::path dir_;
  std::filesystem::path file_;
  mutable std::mutex mu_;
};

// The records that current analyses should see: the newest version of every
// completed cell.
inline std::vector<RunRecord> latest_completed(
    const std::vector<RunRecord>& records) {
  std::map<std::string, RunRecord> best;
  for (const auto& r : records) {
    if (r.status != "completed") continue;
    auto it = best.find(r.cell_digest);
    if (it == best.end() || r.version > it->second.version)
      best[r.cell_digest] = r;
  }
  std::vector<RunRecord> out;
  out.reserve(best.size());
  for (auto& [_, r] : best) out.push_back(std::move(r));
  return out;
}

}  // namespace mexkit::exp
