#pragma once

#include <algorithm>
#include <vector>

#include "mexkit/common.hpp"

namespace mexkit::selection {

// Bookkeeping for iterative attacks over a fixed pool: the queried seed set
// S_i, the still-available remainder D, and the oracle labels aligned to
// S_i. Crafted (non-pool) samples live outside this state by design; only
// pool indices are tracked here.
struct SelectionState {
  std::vector<int> seed_indices;    // S_i, in acquisition order
  std::vector<int> pool_remaining;  // D
  std::vector<int> oracle_labels;   // y_i, aligned to seed_indices
  int round = 0;

  void check(int pool_size) const {
    require(oracle_labels.size() == seed_indices.size(),
            "selection state: |y_i| must equal |S_i|");
    std::vector<char> seen(static_cast<std::size_t>(pool_size), 0);
    for (int i : seed_indices) {
      require(i >= 0 && i < pool_size, "selection state: index out of pool");
      require(!seen[static_cast<std::size_t>(i)],
              "selection state: duplicate index in S_i");
      seen[static_cast<std::size_t>(i)] = 1;
    }
    for (int i : pool_remaining) {
      require(i >= 0 && i < pool_size, "selection state: index out of pool");
      require(!seen[static_cast<std::size_t>(i)],
              "selection state: S_i and D overlap");
      seen[static_cast<std::size_t>(i)] = 2;
    }
  }
};

}  // namespace mexkit::selection
