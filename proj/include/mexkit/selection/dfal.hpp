#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "mexkit/core/dataset.hpp"
#include "mexkit/selection/deepfool.hpp"

namespace mexkit::selection {

// Deepfool Active Learning ranking: candidates closest to the substitute's
// decision boundary (smallest Deepfool perturbation norm) come first.
// Candidates whose craft fails are kept but ranked last, so the requested
// count is always satisfiable. Deterministic: sorted by (norm, pool index).
template <typename Model>
std::vector<int> dfal_rank(const Model& model, const core::LabeledDataset& pool,
                           const std::vector<int>& candidates, int n,
                           const DeepfoolParams& params = {}) {
  require(n >= 0 && n <= static_cast<int>(candidates.size()),
          "dfal_rank: n exceeds candidate count");
  struct Scored {
    double norm;
    int index;
  };
  std::vector<Scored> scored;
  scored.reserve(candidates.size());
  for (int idx : candidates) {
    double norm = std::numeric_limits<double>::infinity();
    try {
      norm = deepfool(model, pool.image(idx), params).perturbation_norm;
    } catch (const CraftingFailed&) {
      // deprioritized, not dropped
    }
    scored.push_back({norm, idx});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.norm != b.norm) return a.norm < b.norm;
    return a.index < b.index;
  });
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(scored[static_cast<std::size_t>(i)].index);
  return out;
}

}  // namespace mexkit::selection
