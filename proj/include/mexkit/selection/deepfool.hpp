#pragma once

#include <cmath>
#include <limits>

#include "mexkit/common.hpp"
#include "mexkit/models/classifier.hpp"

namespace mexkit::selection {

// Iterative linearized minimal-perturbation crafting. Works against any
// model exposing num_classes() / logits(x) / input_gradient(x, cls), i.e.
// the attacker's own substitute; the label-only oracle is never touched.

struct DeepfoolParams {
  int max_iterations = 50;
  double overshoot = 0.02;
};

struct DeepfoolResult {
  models::Vec adversarial_input;   // clipped to [0,1]
  double perturbation_norm = 0.0;  // L2 of the accumulated minimal step,
                                   // before overshoot scaling
  int iterations = 0;
  bool label_changed = false;
};

template <typename Model>
DeepfoolResult deepfool(const Model& model,
                        const Eigen::Ref<const models::Vec>& x,
                        const DeepfoolParams& params = {}) {
  require(params.max_iterations >= 1, "deepfool: max_iterations must be >= 1");
  require(x.minCoeff() >= -1e-6f && x.maxCoeff() <= 1.0f + 1e-6f,
          "deepfool: input outside [0,1]");

  const int classes = model.num_classes();
  const auto argmax = [&](const models::Vec& z) {
    int best = 0;
    for (int c = 1; c < classes; ++c)
      if (z[c] > z[best]) best = c;
    return best;
  };

  models::Vec z0 = model.logits(x);
  const int orig_label = argmax(z0);

  models::Vec r_total = models::Vec::Zero(x.size());
  const float boost = 1.0f + static_cast<float>(params.overshoot);
  // the iterate is kept inside the pixel box so the linearization routes
  // perturbation through pixels that can still move
  models::Vec xi = x;
  int iters = 0;
  int kicks = 0;

  for (; iters < params.max_iterations; ++iters) {
    models::Vec zi = model.logits(xi);
    if (argmax(zi) != orig_label) break;
    models::Vec grad_orig = model.input_gradient(xi, orig_label);
    if (!grad_orig.allFinite())
      throw CraftingFailed("deepfool: non-finite gradient");

    double best_dist = std::numeric_limits<double>::infinity();
    models::Vec best_w;
    double best_f = 0.0;
    for (int c = 0; c < classes; ++c) {
      if (c == orig_label) continue;
      models::Vec w = model.input_gradient(xi, c) - grad_orig;
      if (!w.allFinite()) throw CraftingFailed("deepfool: non-finite gradient");
      const double wn = w.norm();
      if (wn < 1e-12) continue;
      const double f = static_cast<double>(zi[c] - zi[orig_label]);
      const double dist = std::abs(f) / wn;
      if (dist < best_dist) {
        best_dist = dist;
        best_w = std::move(w);
        best_f = f;
      }
    }
    if (!std::isfinite(best_dist))
      throw CraftingFailed("deepfool: all boundary gradients vanished");

    // minimal step onto the nearest linearized boundary
    const double wn2 = best_w.squaredNorm();
    const double step = std::abs(best_f) / wn2;
    r_total += (static_cast<float>(step) * best_w);
    if (!r_total.allFinite())
      throw CraftingFailed("deepfool: non-finite perturbation");
    models::Vec next = (x + boost * r_total).cwiseMax(0.0f).cwiseMin(1.0f);

    // Stall escape: once the iterate reaches the boundary exactly (or the
    // float32 accumulator can no longer resolve the step), argmax ties keep
    // the original class forever. A growing kick along the boundary normal
    // breaks the fixed point.
    if (next == xi) {
      const double kick = 1e-4 * static_cast<double>(1 << std::min(kicks, 12));
      ++kicks;
      r_total += static_cast<float>(kick / std::sqrt(wn2)) * best_w;
      next = (x + boost * r_total).cwiseMax(0.0f).cwiseMin(1.0f);
    }
    xi = std::move(next);
  }

  DeepfoolResult res;
  res.adversarial_input = std::move(xi);
  res.perturbation_norm = static_cast<double>(r_total.norm());
  res.iterations = iters;
  res.label_changed =
      argmax(model.logits(res.adversarial_input)) != orig_label;
  return res;
}

}  // namespace mexkit::selection
