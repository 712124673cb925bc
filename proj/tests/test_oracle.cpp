#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "mexkit/exp/data_gen.hpp"
#include "mexkit/models/checkpoint.hpp"
#include "mexkit/oracle/oracle.hpp"

using namespace mexkit;

namespace {

const exp::CorpusSpec kCorpus{core::ImageShape{8, 8, 1}, 4, 2024, 1.0f};

models::Classifier trained_target() {
  static models::Classifier cached = [] {
    auto train = exp::make_dataset(kCorpus, exp::DataTier::kOriginal,
                                   core::DatasetRole::kTargetTrain, 400, "tt");
    auto val = exp::make_dataset(kCorpus, exp::DataTier::kOriginal,
                                 core::DatasetRole::kAttackerValidation, 120,
                                 "tv");
    models::ArchitectureSpec arch{"target", models::ArchFamily::kCompactCnn,
                                  kCorpus.shape};
    models::TrainingRecipe rec;
    rec.epochs = 8;
    rec.batch_size = 32;
    rec.patience = 0;
    rec.rng_seed = 5;
    return models::train(models::build(arch, rec, kCorpus.class_count), train,
                         val, rec)
        .classifier;
  }();
  return cached;
}

core::LabeledDataset probe_set(int n, const char* name = "probe") {
  return exp::make_dataset(kCorpus, exp::DataTier::kOriginal,
                           core::DatasetRole::kTest, n, name);
}

}  // namespace

TEST_CASE("budget boundary and batch atomicity") {
  auto target = trained_target();
  auto probe = probe_set(60);
  oracle::Oracle orc(target, 50);

  auto first = orc.query(probe.images().leftCols(50));
  CHECK(first.size() == 50);
  CHECK(orc.used() == 50);
  CHECK_THROWS_AS(orc.query(probe.images().rightCols(1)), BudgetExhausted);
  CHECK(orc.used() == 50);

  oracle::Oracle orc2(target, 10);
  orc2.query(probe.images().leftCols(8));
  const auto before = orc2.ledger_snapshot();
  CHECK_THROWS_AS(orc2.query(probe.images().middleCols(8, 3)),
                  BudgetExhausted);
  const auto after = orc2.ledger_snapshot();
  CHECK(after.used() == before.used());
  CHECK(after.round_tallies() == before.round_tallies());
}

TEST_CASE("ledger tallies sum to used and export line format") {
  auto target = trained_target();
  auto probe = probe_set(30);
  oracle::Oracle orc(target, 100);
  orc.query(probe.images().leftCols(10));
  orc.query(probe.images().middleCols(10, 5));
  orc.query(probe.images().rightCols(15));

  auto ledger = orc.ledger_snapshot();
  long long sum = 0;
  for (auto t : ledger.round_tallies()) sum += t;
  CHECK(sum == ledger.used());
  CHECK(ledger.round_tallies() == std::vector<long long>{10, 5, 15});

  std::ostringstream os;
  orc.export_query_log(os);
  CHECK(os.str() == "0,10,10\n1,5,15\n2,15,30\n");
}

TEST_CASE("undefended oracle is a passthrough of target labels") {
  auto target = trained_target();
  auto probe = probe_set(40);
  oracle::Oracle orc(target, 100);
  auto via_oracle = orc.query(probe);
  auto direct = target.predict_labels(probe);
  CHECK(via_oracle.labels == direct.labels);
}

TEST_CASE("degenerate defenses leave labels untouched") {
  auto target = trained_target();
  auto probe = probe_set(40);

  oracle::DefenseSpec zero_sigma;
  zero_sigma.kind = oracle::DefenseKind::kInputPerturbation;
  zero_sigma.noise_scale = 0.0;
  zero_sigma.rng_seed = 3;
  CHECK(oracle::measure_flip_rate(target, zero_sigma, probe) == 0.0);

  oracle::DefenseSpec degenerate_region;
  degenerate_region.kind = oracle::DefenseKind::kRegionBased;
  degenerate_region.region_radius = 0.0;
  degenerate_region.region_samples = 1;
  degenerate_region.rng_seed = 3;
  CHECK(oracle::measure_flip_rate(target, degenerate_region, probe) == 0.0);
}

TEST_CASE("defended labels are deterministic per input") {
  auto target = trained_target();
  auto probe = probe_set(20);
  oracle::DefenseSpec d;
  d.kind = oracle::DefenseKind::kRegionBased;
  d.region_radius = 0.2;
  d.region_samples = 5;
  d.rng_seed = 9;
  for (int i = 0; i < probe.size(); ++i) {
    const int a = oracle::defended_label(target, d, probe.image(i));
    const int b = oracle::defended_label(target, d, probe.image(i));
    REQUIRE(a == b);
  }
}

TEST_CASE("defense calibration reaches the one percent window") {
  auto target = trained_target();
  auto probe = probe_set(400, "calprobe");

  for (auto kind : {oracle::DefenseKind::kInputPerturbation,
                    oracle::DefenseKind::kRegionBased}) {
    auto spec = oracle::calibrate_defense(target, kind, probe, 0.01, 77);
    CAPTURE(to_string(kind));
    CHECK(spec.calibrated_flip_rate >= 0.005);
    CHECK(spec.calibrated_flip_rate <= 0.015);
    // re-measurement reproduces the calibrated rate
    CHECK(oracle::measure_flip_rate(target, spec, probe) ==
          spec.calibrated_flip_rate);
  }
}

TEST_CASE("defended oracle disagrees at roughly the calibrated rate") {
  auto target = trained_target();
  auto probe = probe_set(400, "calprobe");
  auto held_out = probe_set(400, "heldout");

  auto spec = oracle::calibrate_defense(
      target, oracle::DefenseKind::kInputPerturbation, probe, 0.01, 78);
  oracle::Oracle defended(target, 1000, spec);
  auto noisy = defended.query(held_out);
  auto clean = target.predict_labels(held_out);
  int flips = 0;
  for (std::size_t i = 0; i < noisy.labels.size(); ++i)
    if (noisy.labels[i] != clean.labels[i]) ++flips;
  const double rate = double(flips) / held_out.size();
  CHECK(rate >= 0.0);
  CHECK(rate <= 0.03);  // ~1% plus generalization slack
}

TEST_CASE("calibration rejects bad inputs") {
  auto target = trained_target();
  auto probe = probe_set(50);
  CHECK_THROWS_AS(
      oracle::calibrate_defense(target, oracle::DefenseKind::kNone, probe,
                                0.01, 1),
      CalibrationFailed);
  CHECK_THROWS_AS(
      oracle::calibrate_defense(target, oracle::DefenseKind::kRegionBased,
                                probe, 0.2, 1),
      InvalidArgument);
}
