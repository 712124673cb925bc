#include <catch2/catch_amalgamated.hpp>

#include "mexkit/attacks/attacks.hpp"
#include "mexkit/exp/data_gen.hpp"

using namespace mexkit;
using attacks::AttackConfig;
using attacks::Strategy;

namespace {

const exp::CorpusSpec kCorpus{core::ImageShape{8, 8, 1}, 4, 31, 1.0f};

struct Rig {
  models::Classifier target;
  core::LabeledDataset pool;
  core::LabeledDataset val;
  core::LabeledDataset test;

  attacks::EvalContext ctx() const {
    return attacks::EvalContext{&target, &test, /*target_train_size=*/300,
                                nullptr, nullptr};
  }
};

Rig& rig() {
  static Rig r = [] {
    auto train = exp::make_dataset(kCorpus, exp::DataTier::kOriginal,
                                   core::DatasetRole::kTargetTrain, 300, "tt");
    auto val = exp::make_dataset(kCorpus, exp::DataTier::kOriginal,
                                 core::DatasetRole::kAttackerValidation, 80,
                                 "av");
    models::ArchitectureSpec arch{"tgt", models::ArchFamily::kCompactCnn,
                                  kCorpus.shape};
    models::TrainingRecipe rec;
    rec.epochs = 6;
    rec.batch_size = 32;
    rec.patience = 0;
    rec.rng_seed = 9;
    auto target =
        models::train(models::build(arch, rec, kCorpus.class_count), train,
                      val, rec)
            .classifier;
    auto pool = exp::make_dataset(kCorpus, exp::DataTier::kOriginal,
                                  core::DatasetRole::kAttackerPool, 150, "ap");
    auto test = exp::make_dataset(kCorpus, exp::DataTier::kOriginal,
                                  core::DatasetRole::kTest, 100, "te");
    return Rig{std::move(target), std::move(pool), std::move(val),
               std::move(test)};
  }();
  return r;
}

AttackConfig toy_config(Strategy strategy, std::uint64_t seed = 1) {
  AttackConfig c;
  c.strategy = strategy;
  c.budget = 60;
  c.seed_size = 20;
  c.rounds = 4;  // k = 10
  c.substitute_arch = {"sub", models::ArchFamily::kCompactCnn, kCorpus.shape};
  c.substitute_recipe.epochs = 2;
  c.substitute_recipe.batch_size = 16;
  c.substitute_recipe.patience = 0;
  c.substitute_recipe.rng_seed = 4;
  c.pool_dataset = "ap";
  c.validation_dataset = "av";
  c.rng_seed = seed;
  c.deepfool.max_iterations = 25;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  auto c = toy_config(Strategy::kActiveLearning);
  CHECK_NOTHROW(c.validate(150));

  SECTION("pool smaller than budget") {
    CHECK_THROWS_AS(c.validate(59), ConfigError);
  }
  SECTION("seed exceeding budget") {
    c.seed_size = 61;
    CHECK_THROWS_AS(c.validate(150), ConfigError);
  }
  SECTION("indivisible rounds") {
    c.rounds = 7;
    CHECK_THROWS_AS(c.validate(150), ConfigError);
  }
  SECTION("odd k rejected for augmentation") {
    c.strategy = Strategy::kAdversarialAugmentation;
    c.seed_size = 15;
    c.rounds = 5;  // k = 9
    CHECK_THROWS_AS(c.validate(150), ConfigError);
  }
  SECTION("random ignores seed and round fields") {
    c.strategy = Strategy::kRandom;
    c.seed_size = 0;
    c.rounds = 0;
    CHECK_NOTHROW(c.validate(150));
  }
}

TEST_CASE("adjust_seed_size finds a feasible split") {
  const int s = attacks::adjust_seed_size(450, 45, 9, /*need_even_k=*/true);
  CHECK(s >= 1);
  CHECK((450 - s) % 9 == 0);
  CHECK(((450 - s) / 9) % 2 == 0);
  CHECK(s <= 45);
}

TEST_CASE("budget exactness and ledger traces per strategy") {
  auto& r = rig();
  const auto ctx = r.ctx();

  SECTION("random queries once") {
    oracle::Oracle orc(r.target, 60);
    auto rep = attacks::random_attack(orc, r.pool, r.val,
                                      toy_config(Strategy::kRandom), ctx);
    CHECK(rep.queries_used == 60);
    CHECK(rep.ledger_trace == std::vector<long long>{60});
    CHECK(rep.round_val_accuracy.size() == 1);
  }

  for (auto strategy :
       {Strategy::kActiveLearning, Strategy::kAdversarialAugmentation,
        Strategy::kActiveAdversarialAugmentation}) {
    DYNAMIC_SECTION("iterative strategy " << to_string(strategy)) {
      oracle::Oracle orc(r.target, 60);
      auto rep = attacks::run_attack(orc, r.pool, r.val, toy_config(strategy),
                                     ctx);
      CHECK(rep.queries_used == 60);
      CHECK(rep.ledger_trace ==
            std::vector<long long>{20, 10, 10, 10, 10});  // [s, k, ..., k]
      CHECK(rep.round_val_accuracy.size() == 5);           // seed + r rounds
      CHECK(rep.test.queries_used == 60);
      CHECK(rep.test.query_score == 60.0 / 300.0);
    }
  }
}

TEST_CASE("identical seeds replay identical traces") {
  auto& r = rig();
  const auto ctx = r.ctx();
  for (auto strategy :
       {Strategy::kRandom, Strategy::kActiveLearning,
        Strategy::kAdversarialAugmentation,
        Strategy::kActiveAdversarialAugmentation}) {
    DYNAMIC_SECTION("strategy " << to_string(strategy)) {
      oracle::Oracle o1(r.target, 60);
      oracle::Oracle o2(r.target, 60);
      auto rep1 =
          attacks::run_attack(o1, r.pool, r.val, toy_config(strategy, 7), ctx);
      auto rep2 =
          attacks::run_attack(o2, r.pool, r.val, toy_config(strategy, 7), ctx);
      CHECK(rep1.selection_trace_digest == rep2.selection_trace_digest);
      CHECK(rep1.ledger_trace == rep2.ledger_trace);
      CHECK(rep1.test.accuracy == rep2.test.accuracy);
      CHECK(rep1.test.fidelity == rep2.test.fidelity);

      oracle::Oracle o3(r.target, 60);
      auto rep3 =
          attacks::run_attack(o3, r.pool, r.val, toy_config(strategy, 8), ctx);
      CHECK(rep1.selection_trace_digest != rep3.selection_trace_digest);
    }
  }
}

TEST_CASE("attack loop touches the target only through the oracle") {
  auto& r = rig();
  // Same oracle target, but a decoy evaluation-context target trained
  // differently: the selection trace must not notice the difference.
  auto train2 = exp::make_dataset(kCorpus, exp::DataTier::kOriginal,
                                  core::DatasetRole::kTargetTrain, 200, "t2");
  models::TrainingRecipe rec2;
  rec2.epochs = 3;
  rec2.batch_size = 16;
  rec2.patience = 0;
  rec2.rng_seed = 99;
  auto decoy = models::train(
                   models::build({"decoy", models::ArchFamily::kCompactCnn,
                                  kCorpus.shape},
                                 rec2, kCorpus.class_count),
                   train2, r.val, rec2)
                   .classifier;

  attacks::EvalContext real_ctx = r.ctx();
  attacks::EvalContext decoy_ctx = real_ctx;
  decoy_ctx.target = &decoy;

  oracle::Oracle o1(r.target, 60);
  oracle::Oracle o2(r.target, 60);
  const auto cfg = toy_config(Strategy::kActiveAdversarialAugmentation, 5);
  auto rep_real = attacks::run_attack(o1, r.pool, r.val, cfg, real_ctx);
  auto rep_decoy = attacks::run_attack(o2, r.pool, r.val, cfg, decoy_ctx);

  // identical loop behaviour; only the evaluation bundles may differ
  CHECK(rep_real.selection_trace_digest == rep_decoy.selection_trace_digest);
  CHECK(rep_real.ledger_trace == rep_decoy.ledger_trace);
}

TEST_CASE("degenerate single-round config") {
  auto& r = rig();
  auto c = toy_config(Strategy::kActiveLearning);
  c.rounds = 1;
  c.seed_size = 50;  // k = 10, one selection round
  oracle::Oracle orc(r.target, 60);
  auto rep = attacks::run_attack(orc, r.pool, r.val, c, r.ctx());
  CHECK(rep.ledger_trace == std::vector<long long>{50, 10});
}

TEST_CASE("sub-pool shortfall falls back to remaining candidates") {
  auto& r = rig();
  auto c = toy_config(Strategy::kActiveLearning);
  c.budget = 120;
  c.seed_size = 40;
  c.rounds = 4;  // k = 20, remainder 110 -> sub-pools of ~27 < 2k = 40
  oracle::Oracle orc(r.target, 120);
  auto rep = attacks::run_attack(orc, r.pool, r.val, c, r.ctx());
  CHECK(rep.queries_used == 120);
  bool fallback_logged = false;
  for (const auto& line : rep.log)
    if (line.find("sub-pool below 2k") != std::string::npos)
      fallback_logged = true;
  CHECK(fallback_logged);
}

TEST_CASE("training set grows by k per round up to the budget") {
  auto& r = rig();
  const auto cfg = toy_config(Strategy::kAdversarialAugmentation, 3);
  oracle::Oracle orc(r.target, 60);
  auto rep = attacks::run_attack(orc, r.pool, r.val, cfg, r.ctx());
  // cumulative ledger positions are exactly the per-round training sizes
  long long cum = 0;
  std::vector<long long> sizes;
  for (auto t : rep.ledger_trace) sizes.push_back(cum += t);
  CHECK(sizes == std::vector<long long>{20, 30, 40, 50, 60});
}

TEST_CASE("transferability") {
  auto& r = rig();
  auto probe = exp::make_dataset(kCorpus, exp::DataTier::kOriginal,
                                 core::DatasetRole::kTest, 80, "tp");

  CHECK_THROWS_AS(attacks::transferability(r.target, r.target, probe, 0),
                  InvalidArgument);

  // identity case: transfer rate equals the deepfool success rate on the
  // jointly-correct samples
  std::vector<std::string> log;
  const double t =
      attacks::transferability(r.target, r.target, probe, 20, {}, &log);
  int crafted = 0, flipped = 0;
  for (int i = 0; i < probe.size() && crafted < 20; ++i) {
    if (r.target.predict_one(probe.image(i)) != probe.label(i)) continue;
    auto res = selection::deepfool(r.target, probe.image(i), {});
    ++crafted;
    if (res.label_changed) ++flipped;
  }
  CHECK(t == double(flipped) / crafted);
  CHECK(t >= 0.0);
  CHECK(t <= 1.0);
}
