// Experiment runner and reporting CLI for the extraction framework.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mexkit/mexkit.hpp"

namespace fs = std::filesystem;
using namespace mexkit;

namespace {

exp::ExperimentMatrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open matrix file: " + path);
  nlohmann::json j;
  in >> j;
  return exp::parse_matrix(j);
}

std::vector<exp::RunRecord> load_records(const std::string& dir) {
  exp::RecordStore store(dir);
  auto records = store.load_all();
  if (records.empty())
    std::cerr << "warning: no records under " << dir << "\n";
  return records;
}

int cmd_run(const std::string& matrix_path, bool resume, int workers,
            const std::string& output, bool quiet) {
  auto matrix = load_matrix(matrix_path);
  exp::RunOptions opts;
  opts.resume = resume;
  opts.workers = workers;
  opts.output_dir = output;
  opts.verbose = !quiet;

  const auto records = exp::run_matrix(matrix, opts);
  int completed = 0, failed = 0;
  for (const auto& r : records) (r.status == "completed" ? completed : failed)++;
  std::cout << "executed " << records.size() << " cells: " << completed
            << " completed, " << failed << " failed\n";
  std::cout << "records: "
            << (fs::path(output.empty() ? matrix.output_dir : output) /
                "records.jsonl")
                   .string()
            << "\n";
  return failed == 0 ? 0 : 1;
}

int cmd_report(const std::string& dir, const std::string& factor_name) {
  const auto factor = exp::factor_from_string(factor_name);
  const auto records = load_records(dir);
  const auto doc = exp::render_factor_table(records, factor);

  exp::write_text(doc, std::cout);

  const fs::path tables = fs::path(dir) / "tables";
  fs::create_directories(tables);
  {
    std::ofstream txt(tables / (factor_name + ".txt"));
    exp::write_text(doc, txt);
  }
  {
    std::ofstream csv(tables / (factor_name + ".csv"));
    exp::write_csv(doc, csv);
  }
  std::cout << "\nwritten: " << (tables / (factor_name + ".txt")).string()
            << ", " << (tables / (factor_name + ".csv")).string() << "\n";
  return 0;
}

int cmd_trends(const std::string& dir) {
  const auto records = load_records(dir);
  const auto outcomes = exp::check_trends(records);
  int failed = 0;
  for (const auto& t : outcomes) {
    std::cout << t.id << " [" << to_string(t.state) << "] " << t.description
              << " — " << t.detail << "\n";
    if (t.state == exp::TrendOutcome::State::kFail) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

int cmd_list(const std::string& dir) {
  const auto records = load_records(dir);
  exp::TableDoc doc;
  doc.title = "Run records (" + std::to_string(records.size()) + ")";
  doc.header = {"status", "target", "tier",   "budget", "strategy",
                "sub",    "seed",   "version", "acc",    "fid",
                "sec"};
  char buf[32];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%.1f", r.duration_seconds);
    std::vector<std::string> row = {r.status,
                                    r.target,
                                    r.tier,
                                    std::to_string(r.budget),
                                    r.strategy,
                                    r.substitute,
                                    std::to_string(r.attack_seed),
                                    std::to_string(r.version),
                                    "-",
                                    "-",
                                    buf};
    if (r.status == "completed") {
      char acc[16], fid[16];
      std::snprintf(acc, sizeof(acc), "%.2f%%",
                    core::to_percent(r.test.accuracy));
      std::snprintf(fid, sizeof(fid), "%.2f%%",
                    core::to_percent(r.test.fidelity));
      row[8] = acc;
      row[9] = fid;
    }
    doc.rows.push_back(std::move(row));
  }
  exp::write_text(doc, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mexkit — substitute-model extraction attack experiments"};
  app.require_subcommand(1);

  std::string matrix_path, records_dir, factor, output;
  bool resume = false, quiet = false;
  int workers = 1;

  auto* run = app.add_subcommand("run", "execute an experiment matrix");
  run->add_option("matrix", matrix_path, "matrix JSON file")->required();
  run->add_flag("--resume", resume, "skip cells with completed records");
  run->add_option("--workers", workers, "parallel cell workers")
      ->check(CLI::PositiveNumber);
  run->add_option("--output", output, "override the matrix output directory");
  run->add_flag("--quiet", quiet, "suppress per-cell progress");

  auto* report = app.add_subcommand("report", "render a factor table");
  report->add_option("records", records_dir, "records directory")->required();
  report
      ->add_option("--factor", factor,
                   "target-performance | substitute-architecture | "
                   "training-strategy | data-quality | query-optimisation")
      ->required();

  auto* trends = app.add_subcommand("trends", "evaluate replication trends");
  trends->add_option("records", records_dir, "records directory")->required();

  auto* list = app.add_subcommand("list", "list run records");
  list->add_option("records", records_dir, "records directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(matrix_path, resume, workers, output, quiet);
    if (report->parsed()) return cmd_report(records_dir, factor);
    if (trends->parsed()) return cmd_trends(records_dir);
    if (list->parsed()) return cmd_list(records_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
