#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "mexkit/core/metrics.hpp"
#include "mexkit/core/serialize.hpp"

using namespace mexkit;
using core::LabeledDataset;
using core::PredictionVector;

namespace {

// Test-only fixtures: a dataset whose images are irrelevant for metric math.
LabeledDataset dataset_with_labels(const std::vector<int>& labels,
                                   int class_count) {
  Eigen::MatrixXf imgs =
      Eigen::MatrixXf::Zero(4, static_cast<Eigen::Index>(labels.size()));
  return LabeledDataset("t", core::ImageShape{2, 2, 1}, imgs, labels,
                        core::DatasetRole::kTest, class_count);
}

PredictionVector preds(const std::vector<int>& labels) {
  return PredictionVector{"m", labels};
}

// Independent brute-force oracle: plain counting loops, no shared helpers.
struct LoopOracle {
  static double acc(const std::vector<int>& p, const std::vector<int>& t) {
    int c = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (p[i] == t[i]) c++;
    return double(c) / double(t.size());
  }
  static double fid(const std::vector<int>& s, const std::vector<int>& g) {
    int c = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] == g[i]) c++;
    return double(c) / double(s.size());
  }
  static double joint(const std::vector<int>& s, const std::vector<int>& g,
                      const std::vector<int>& t) {
    int c = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (s[i] == t[i] && g[i] == t[i]) c++;
    return double(c) / double(t.size());
  }
};

}  // namespace

TEST_CASE("accuracy") {
  auto truth = dataset_with_labels({0, 1, 2, 3}, 4);
  CHECK(core::accuracy(preds({0, 1, 2, 3}), truth) == 1.0);
  CHECK(core::accuracy(preds({0, 1, 0, 0}), truth) == 0.5);
  CHECK(core::accuracy(preds({1, 2, 3, 0}), truth) == 0.0);
  CHECK_THROWS_AS(core::accuracy(preds({0, 1}), truth), InvalidArgument);
}

TEST_CASE("fidelity") {
  auto tgt = preds({0, 1, 2, 0});
  CHECK(core::fidelity(tgt, tgt) == 1.0);
  CHECK(core::fidelity(preds({0, 1, 0, 0}), tgt) == 0.75);
  CHECK(core::fidelity(preds({1, 1, 1, 1}), preds({0, 0, 0, 0})) == 0.0);
  CHECK_THROWS_AS(core::fidelity(preds({0}), tgt), InvalidArgument);
}

TEST_CASE("joint accuracy") {
  auto truth = dataset_with_labels({0, 1, 2, 3}, 4);
  CHECK(core::joint_accuracy(preds({0, 1, 2, 3}), preds({0, 1, 2, 3}), truth) ==
        1.0);
  CHECK(core::joint_accuracy(preds({0, 1, 0, 0}), preds({0, 1, 2, 0}), truth) ==
        0.5);
  // substitute equals target but both are wrong everywhere
  CHECK(core::joint_accuracy(preds({1, 2, 3, 0}), preds({1, 2, 3, 0}), truth) ==
        0.0);
  CHECK_THROWS_AS(core::joint_accuracy(preds({0}), preds({0}), truth),
                  InvalidArgument);
}

TEST_CASE("prediction decomposition") {
  CHECK_THAT(core::correct_pred_accuracy(0.8702, 0.9176),
             Catch::Matchers::WithinAbs(0.9483, 0.0001));
  CHECK_THAT(core::correct_pred_accuracy(0.9215, 0.9361),
             Catch::Matchers::WithinAbs(0.9844, 0.0001));
  CHECK(core::correct_pred_accuracy(0.42, 0.42) == 1.0);
  CHECK_THROWS_AS(core::correct_pred_accuracy(0.0, 0.0),
                  UndefinedDecomposition);

  CHECK_THAT(core::incorrect_pred_accuracy(0.9061, 0.8702, 0.9176),
             Catch::Matchers::WithinAbs(0.4357, 0.0005));
  CHECK_THAT(core::incorrect_pred_accuracy(0.9350, 0.9215, 0.9361),
             Catch::Matchers::WithinAbs(0.2113, 0.0005));
  CHECK(core::incorrect_pred_accuracy(0.7, 0.7, 0.9) == 0.0);
  CHECK_THROWS_AS(core::incorrect_pred_accuracy(1.0, 1.0, 1.0),
                  UndefinedDecomposition);
}

TEST_CASE("query score") {
  CHECK(core::query_score(45000, 50000) == 0.9);
  CHECK(core::query_score(0, 50000) == 0.0);
  CHECK(core::query_score(100000, 50000) == 2.0);
  CHECK_THROWS_AS(core::query_score(1, 0), InvalidArgument);
}

TEST_CASE("metric ops match the loop oracle on random instances") {
  std::mt19937_64 rng(911);
  for (int it = 0; it < 300; ++it) {
    std::uniform_int_distribution<int> len_d(1, 100);
    std::uniform_int_distribution<int> k_d(2, 10);
    const int n = len_d(rng);
    const int k = k_d(rng);
    std::uniform_int_distribution<int> lab(0, k - 1);
    std::vector<int> t(n), s(n), g(n);
    for (int i = 0; i < n; ++i) {
      t[i] = lab(rng);
      s[i] = lab(rng);
      g[i] = lab(rng);
    }
    auto truth = dataset_with_labels(t, k);
    CHECK(core::accuracy(preds(s), truth) == LoopOracle::acc(s, t));
    CHECK(core::fidelity(preds(s), preds(g)) == LoopOracle::fid(s, g));
    CHECK(core::joint_accuracy(preds(s), preds(g), truth) ==
          LoopOracle::joint(s, g, t));
  }
}

TEST_CASE("bound and decomposition invariants on random triples") {
  std::mt19937_64 rng(4242);
  for (int it = 0; it < 2000; ++it) {
    std::uniform_int_distribution<int> len_d(1, 60);
    std::uniform_int_distribution<int> k_d(2, 6);
    const int n = len_d(rng);
    const int k = k_d(rng);
    std::uniform_int_distribution<int> lab(0, k - 1);
    std::vector<int> t(n), s(n), g(n);
    for (int i = 0; i < n; ++i) {
      t[i] = lab(rng);
      s[i] = lab(rng);
      g[i] = lab(rng);
    }
    auto truth = dataset_with_labels(t, k);
    const double acc = core::accuracy(preds(s), truth);
    const double tacc = core::accuracy(preds(g), truth);
    const double fid = core::fidelity(preds(s), preds(g));
    const double joint = core::joint_accuracy(preds(s), preds(g), truth);

    REQUIRE(joint <= acc);
    REQUIRE(joint <= fid);
    REQUIRE(joint <= tacc);
    REQUIRE(fid - joint <= 1.0 - tacc + 1e-12);

    if (tacc > 0.0 && tacc < 1.0) {
      const double cpa = core::correct_pred_accuracy(joint, tacc);
      const double ipa = core::incorrect_pred_accuracy(fid, joint, tacc);
      REQUIRE(std::abs(fid - (cpa * tacc + ipa * (1.0 - tacc))) <= 1e-9);
    }
  }
}

TEST_CASE("metric ops are pure") {
  auto truth = dataset_with_labels({0, 1, 0, 1, 2}, 3);
  auto p = preds({0, 1, 1, 1, 0});
  const double first = core::accuracy(p, truth);
  for (int i = 0; i < 5; ++i) CHECK(core::accuracy(p, truth) == first);
}

TEST_CASE("bundle serialization round trip") {
  core::MetricsBundle m;
  m.accuracy = 0.9027;
  m.fidelity = 0.9061;
  m.joint_accuracy = 0.8702;
  m.target_accuracy = 0.9176;
  m.correct_pred_accuracy = core::correct_pred_accuracy(0.8702, 0.9176);
  m.incorrect_pred_accuracy =
      core::incorrect_pred_accuracy(0.9061, 0.8702, 0.9176);
  m.queries_used = 45000;
  m.query_score = core::query_score(45000, 50000);

  auto j = core::to_json(m);
  // exact field names are the contract
  for (const char* key :
       {"accuracy", "fidelity", "joint_accuracy", "target_accuracy",
        "correct_pred_accuracy", "incorrect_pred_accuracy", "query_score",
        "queries_used", "transferability"})
    REQUIRE(j.contains(key));

  auto back = core::metrics_from_json(j);
  CHECK(back.accuracy == m.accuracy);
  CHECK(back.queries_used == m.queries_used);
  CHECK(!back.transferability.has_value());

  m.transferability = 0.16;
  auto j2 = core::to_json(m);
  CHECK(core::metrics_from_json(j2).transferability.value() == 0.16);
}

TEST_CASE("percent rendering rounds half away from zero") {
  CHECK(core::to_percent(0.94835) == 94.84);  // 0.94835 -> 94.835 -> 94.84
  CHECK(core::to_percent(0.5) == 50.0);
  CHECK(core::to_percent(0.123449) == 12.34);
}
