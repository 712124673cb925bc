#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "mexkit/exp/data_gen.hpp"
#include "mexkit/models/checkpoint.hpp"
#include "mexkit/selection/deepfool.hpp"
#include "mexkit/selection/dfal.hpp"
#include "mexkit/selection/kcenter.hpp"
#include "mexkit/selection/state.hpp"

using namespace mexkit;
using models::Vec;

namespace {

// Two-class linear scorer: logits = (0, w.x + b). Deepfool against it has
// the closed-form single step -(w.x+b)/|w|^2 * w when class 1 is predicted.
struct LinearModel {
  Vec w;
  float b = 0.0f;

  int num_classes() const { return 2; }
  Vec logits(const Eigen::Ref<const Vec>& x) const {
    Vec z(2);
    z[0] = 0.0f;
    z[1] = w.dot(x) + b;
    return z;
  }
  Vec input_gradient(const Eigen::Ref<const Vec>&, int cls) const {
    return cls == 1 ? w : Vec(Vec::Zero(w.size()));
  }
};

const exp::CorpusSpec kCorpus{core::ImageShape{8, 8, 1}, 4, 99, 1.0f};

models::Classifier trained_substitute() {
  static models::Classifier cached = [] {
    auto train = exp::make_dataset(kCorpus, exp::DataTier::kOriginal,
                                   core::DatasetRole::kTargetTrain, 400, "st");
    auto val = exp::make_dataset(kCorpus, exp::DataTier::kOriginal,
                                 core::DatasetRole::kAttackerValidation, 100,
                                 "sv");
    models::ArchitectureSpec arch{"sub", models::ArchFamily::kCompactCnn,
                                  kCorpus.shape};
    models::TrainingRecipe rec;
    rec.epochs = 8;
    rec.batch_size = 32;
    rec.patience = 0;
    rec.rng_seed = 3;
    return models::train(models::build(arch, rec, kCorpus.class_count), train,
                         val, rec)
        .classifier;
  }();
  return cached;
}

}  // namespace

TEST_CASE("deepfool matches the linear closed form") {
  LinearModel m;
  m.w = Vec(4);
  m.w << 0.8f, -0.5f, 0.3f, 0.1f;
  m.b = -0.35f;

  Vec x(4);
  x << 0.9f, 0.2f, 0.7f, 0.5f;
  const float f = m.w.dot(x) + m.b;
  REQUIRE(f > 0.1f);  // class 1 predicted, comfortably off the boundary

  selection::DeepfoolParams params;
  params.overshoot = 0.0;
  auto res = selection::deepfool(m, x, params);

  const Vec expected = x - (f / m.w.squaredNorm()) * m.w;
  REQUIRE(res.iterations >= 1);
  for (int i = 0; i < 4; ++i)
    REQUIRE_THAT(static_cast<double>(res.adversarial_input[i]),
                 Catch::Matchers::WithinRel(static_cast<double>(expected[i]),
                                            1e-6));
  CHECK_THAT(res.perturbation_norm,
             Catch::Matchers::WithinRel(f / m.w.norm(), 1e-5));
}

TEST_CASE("a sample on the boundary flips in one iteration") {
  LinearModel m;
  m.w = Vec(4);
  m.w << 1.0f, 0.0f, 0.0f, 0.0f;
  m.b = 0.0f;
  Vec x(4);
  x << 1e-9f, 0.5f, 0.5f, 0.5f;  // numerically on the boundary
  auto res = selection::deepfool(m, x, {});
  CHECK(res.iterations == 1);
  CHECK(res.label_changed);
}

TEST_CASE("deepfool output stays inside the pixel range") {
  auto model = trained_substitute();
  auto pool = exp::make_dataset(kCorpus, exp::DataTier::kOriginal,
                                core::DatasetRole::kAttackerPool, 60, "pool");
  int flipped = 0;
  for (int i = 0; i < pool.size(); ++i) {
    auto res = selection::deepfool(model, pool.image(i), {});
    REQUIRE(res.adversarial_input.minCoeff() >= 0.0f);
    REQUIRE(res.adversarial_input.maxCoeff() <= 1.0f);
    REQUIRE(res.iterations <= 50);
    if (res.label_changed) ++flipped;
  }
  CHECK(flipped >= pool.size() * 9 / 10);
}

TEST_CASE("dfal ranks boundary-proximal samples first") {
  LinearModel m;
  m.w = Vec(4);
  m.w << 1.0f, 0.0f, 0.0f, 0.0f;
  m.b = 0.0f;

  // distances to the boundary: 0.5, 0.1, 0.9
  Eigen::MatrixXf imgs(4, 3);
  imgs.setZero();
  imgs(0, 0) = 0.5f;
  imgs(0, 1) = 0.1f;
  imgs(0, 2) = 0.9f;
  core::LabeledDataset pool("p", core::ImageShape{2, 2, 1}, imgs, {0, 0, 0},
                            core::DatasetRole::kAttackerPool, 2);

  selection::DeepfoolParams params;
  params.overshoot = 0.0;
  auto top2 = selection::dfal_rank(m, pool, {0, 1, 2}, 2, params);
  CHECK(top2 == std::vector<int>{1, 0});

  auto all = selection::dfal_rank(m, pool, {0, 1, 2}, 3, params);
  CHECK(all == std::vector<int>{1, 0, 2});

  // stability under repetition
  CHECK(selection::dfal_rank(m, pool, {0, 1, 2}, 3, params) == all);
}

TEST_CASE("k-center picks the farthest candidate") {
  std::vector<Vec> points;
  auto pt = [](float a, float b) {
    Vec v(2);
    v << a, b;
    return v;
  };
  points.push_back(pt(0.0f, 0.0f));  // 0: labeled
  points.push_back(pt(1.0f, 0.0f));  // 1
  points.push_back(pt(0.1f, 0.0f));  // 2
  points.push_back(pt(0.0f, 2.0f));  // 3
  auto embed = [&](int i) { return points[static_cast<std::size_t>(i)]; };

  CHECK(selection::k_center_select(embed, {0}, {1, 2, 3}, 1) ==
        std::vector<int>{3});

  // k equal to the candidate count returns all, in greedy order
  auto order = selection::k_center_select(embed, {0}, {1, 2, 3}, 3);
  REQUIRE(order.size() == 3);
  CHECK(order[0] == 3);
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{1, 2, 3});

  // a duplicate of a labeled point is picked last
  points.push_back(pt(0.0f, 0.0f));  // 4: duplicate of labeled 0
  auto with_dup = selection::k_center_select(embed, {0}, {1, 3, 4}, 3);
  CHECK(with_dup.back() == 4);

  // empty labeled set: first pick is the lowest candidate index
  auto no_labels = selection::k_center_select(embed, {}, {2, 1, 3}, 1);
  CHECK(no_labels == std::vector<int>{1});
}

TEST_CASE("greedy k-center stays within twice the optimal radius") {
  std::mt19937_64 rng(515);
  std::uniform_real_distribution<float> coord(0.0f, 1.0f);
  std::uniform_int_distribution<int> n_d(3, 8);
  std::uniform_int_distribution<int> k_d(1, 3);

  for (int inst = 0; inst < 25; ++inst) {
    const int n = n_d(rng);
    const int k = std::min(k_d(rng), n);
    std::vector<Vec> pts;
    for (int i = 0; i < n; ++i) {
      Vec v(2);
      v << coord(rng), coord(rng);
      pts.push_back(v);
    }
    auto embed = [&](int i) { return pts[static_cast<std::size_t>(i)]; };
    std::vector<int> cands(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) cands[static_cast<std::size_t>(i)] = i;

    auto greedy = selection::k_center_select(embed, {}, cands, k);
    const double greedy_r =
        selection::covering_radius(embed, {}, cands, greedy);

    // exhaustive optimum over all k-subsets
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> subset(static_cast<std::size_t>(k));
    std::function<void(int, int)> enumerate = [&](int start, int depth) {
      if (depth == k) {
        best = std::min(best,
                        selection::covering_radius(embed, {}, cands, subset));
        return;
      }
      for (int i = start; i < n; ++i) {
        subset[static_cast<std::size_t>(depth)] = i;
        enumerate(i + 1, depth + 1);
      }
    };
    enumerate(0, 0);

    REQUIRE(greedy_r <= 2.0 * best + 1e-9);

    // dropping any single greedy pick cannot shrink the covering radius
    for (std::size_t drop = 0; drop < greedy.size(); ++drop) {
      std::vector<int> reduced;
      for (std::size_t j = 0; j < greedy.size(); ++j)
        if (j != drop) reduced.push_back(greedy[j]);
      REQUIRE(greedy_r <=
              selection::covering_radius(embed, {}, cands, reduced) + 1e-9);
    }
  }
}

TEST_CASE("selection state invariants") {
  selection::SelectionState st;
  st.seed_indices = {0, 3, 5};
  st.oracle_labels = {1, 0, 2};
  st.pool_remaining = {1, 2, 4};
  CHECK_NOTHROW(st.check(6));

  st.pool_remaining.push_back(3);  // overlaps S_i
  CHECK_THROWS_AS(st.check(6), InvalidArgument);

  st.pool_remaining = {1, 2};
  st.oracle_labels.pop_back();  // |y| != |S|
  CHECK_THROWS_AS(st.check(6), InvalidArgument);
}
