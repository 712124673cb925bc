#pragma once

#include <limits>
#include <vector>

#include "mexkit/common.hpp"
#include "mexkit/models/network.hpp"

namespace mexkit::selection {

// Greedy farthest-first core-set selection: repeatedly picks the candidate
// with the largest minimum L2 distance (in embed space) to the labeled set
// plus everything already picked. Ties resolve to the lower pool index; with
// an empty labeled set the first pick is therefore the lowest-index
// candidate. Returned in pick order.
template <typename EmbedFn>
std::vector<int> k_center_select(EmbedFn&& embed,
                                 const std::vector<int>& labeled,
                                 const std::vector<int>& candidates, int k) {
  require(k >= 0 && k <= static_cast<int>(candidates.size()),
          "k_center_select: k exceeds candidate count");

  std::vector<models::Vec> cand_emb;
  cand_emb.reserve(candidates.size());
  for (int idx : candidates) cand_emb.push_back(embed(idx));

  // running min distance of each candidate to labeled ∪ picked
  std::vector<double> min_dist(candidates.size(),
                               std::numeric_limits<double>::infinity());
  for (int lab : labeled) {
    const models::Vec le = embed(lab);
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      const double d = static_cast<double>((cand_emb[j] - le).norm());
      if (d < min_dist[j]) min_dist[j] = d;
    }
  }

  std::vector<bool> picked(candidates.size(), false);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int round = 0; round < k; ++round) {
    int best = -1;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (picked[j]) continue;
      if (best < 0 || min_dist[j] > min_dist[static_cast<std::size_t>(best)] ||
          (min_dist[j] == min_dist[static_cast<std::size_t>(best)] &&
           candidates[j] < candidates[static_cast<std::size_t>(best)]))
        best = static_cast<int>(j);
    }
    picked[static_cast<std::size_t>(best)] = true;
    out.push_back(candidates[static_cast<std::size_t>(best)]);
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (picked[j]) continue;
      const double d = static_cast<double>(
          (cand_emb[j] - cand_emb[static_cast<std::size_t>(best)]).norm());
      if (d < min_dist[j]) min_dist[j] = d;
    }
  }
  return out;
}

// Covering radius of a selection: max over candidates of the min distance to
// selected ∪ labeled (infinite when both are empty). Used by tests and
// diagnostics.
template <typename EmbedFn>
double covering_radius(EmbedFn&& embed, const std::vector<int>& labeled,
                       const std::vector<int>& candidates,
                       const std::vector<int>& selected) {
  double worst = 0.0;
  for (int idx : candidates) {
    const models::Vec e = embed(idx);
    double best = std::numeric_limits<double>::infinity();
    for (int lab : labeled)
      best = std::min(best, static_cast<double>((embed(lab) - e).norm()));
    for (int sel : selected)
      best = std::min(best, static_cast<double>((embed(sel) - e).norm()));
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace mexkit::selection
