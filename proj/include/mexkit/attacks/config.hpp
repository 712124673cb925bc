#pragma once

#include <string>

#include "mexkit/common.hpp"
#include "mexkit/models/architectures.hpp"
#include "mexkit/models/recipe.hpp"
#include "mexkit/selection/deepfool.hpp"

namespace mexkit::attacks {

enum class Strategy {
  kRandom,
  kActiveLearning,
  kAdversarialAugmentation,
  kActiveAdversarialAugmentation,
};

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kRandom: return "random";
    case Strategy::kActiveLearning: return "active-learning";
    case Strategy::kAdversarialAugmentation: return "adversarial-augmentation";
    case Strategy::kActiveAdversarialAugmentation:
      return "active-adversarial-augmentation";
  }
  return "?";
}

inline Strategy strategy_from_string(const std::string& s) {
  if (s == "random") return Strategy::kRandom;
  if (s == "active-learning") return Strategy::kActiveLearning;
  if (s == "adversarial-augmentation")
    return Strategy::kAdversarialAugmentation;
  if (s == "active-adversarial-augmentation")
    return Strategy::kActiveAdversarialAugmentation;
  throw ConfigError("unknown strategy: " + s);
}

inline bool uses_rounds(Strategy s) { return s != Strategy::kRandom; }
inline bool uses_augmentation(Strategy s) {
  return s == Strategy::kAdversarialAugmentation ||
         s == Strategy::kActiveAdversarialAugmentation;
}

// One attack run, fully specified. (config, rng_seed) determines the whole
// selected-index sequence and query trace.
struct AttackConfig {
  Strategy strategy = Strategy::kRandom;
  long long budget = 0;    // q
  int seed_size = 0;       // s; ignored by the random strategy
  int rounds = 0;          // r; ignored by the random strategy
  int sub_pool_count = 0;  // 0 -> defaults to rounds
  models::ArchitectureSpec substitute_arch;
  models::TrainingRecipe substitute_recipe;
  std::string pool_dataset;
  std::string validation_dataset;
  std::uint64_t rng_seed = 1;
  selection::DeepfoolParams deepfool{};

  int effective_sub_pools() const {
    return sub_pool_count > 0 ? sub_pool_count : rounds;
  }

  // k = (q - s) / r
  int per_round() const {
    return static_cast<int>((budget - seed_size) / rounds);
  }

  void validate(int pool_size) const {
    if (budget <= 0) throw ConfigError("config: budget must be positive");
    if (pool_size < budget)
      throw ConfigError("config: pool smaller than the query budget");
    substitute_recipe.validate();
    if (!uses_rounds(strategy)) return;

    if (seed_size < 1) throw ConfigError("config: seed size must be >= 1");
    if (seed_size > budget)
      throw ConfigError("config: seed size exceeds the budget");
    if (rounds < 1) throw ConfigError("config: rounds must be >= 1");
    if ((budget - seed_size) % rounds != 0)
      throw ConfigError("config: (q - s) must be divisible by r");
    const int k = per_round();
    if (k < 1) throw ConfigError("config: per-round batch k must be >= 1");
    if (uses_augmentation(strategy) && k % 2 != 0)
      throw ConfigError("config: augmentation strategies need an even k");
    if (effective_sub_pools() < 1)
      throw ConfigError("config: sub_pool_count must be positive");
  }

  std::string digest() const {
    Fnv1a h;
    h.update(to_string(strategy));
    h.update_value(budget);
    h.update_value(seed_size);
    h.update_value(rounds);
    h.update_value(effective_sub_pools());
    h.update(substitute_arch.name);
    h.update(to_string(substitute_arch.family));
    h.update_value(substitute_arch.input_shape.height);
    h.update_value(substitute_arch.input_shape.width);
    h.update_value(substitute_arch.input_shape.channels);
    h.update(substitute_recipe.digest());
    h.update(pool_dataset);
    h.update(validation_dataset);
    h.update_value(rng_seed);
    h.update_value(deepfool.max_iterations);
    h.update_value(deepfool.overshoot);
    return h.hex();
  }
};

// Largest s <= hint with (q - s) divisible by r (and even k when required).
// Used by the (s, r) tuning grid, which scores candidates on validation
// accuracy.
inline int adjust_seed_size(long long budget, int hint, int rounds,
                            bool need_even_k) {
  for (int s = std::min<long long>(hint, budget - rounds); s >= 1; --s) {
    const long long rem = budget - s;
    if (rem % rounds != 0) continue;
    const long long k = rem / rounds;
    if (k < 1) continue;
    if (need_even_k && k % 2 != 0) continue;
    return s;
  }
  throw ConfigError("adjust_seed_size: no feasible seed size");
}

}  // namespace mexkit::attacks
