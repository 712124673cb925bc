#pragma once

#include <cstdint>
#include <sstream>
#include <string>

#include "mexkit/common.hpp"

namespace mexkit::models {

enum class InitStrategy { kScratch, kTransfer };
enum class Optimizer { kSgdMomentum, kAdam };

inline const char* to_string(InitStrategy s) {
  return s == InitStrategy::kScratch ? "scratch" : "transfer";
}
inline const char* to_string(Optimizer o) {
  return o == Optimizer::kSgdMomentum ? "sgd-momentum" : "adam";
}

// "constant:<lr>" or "step:<lr>:<every>:<gamma>".
struct LrSchedule {
  enum class Kind { kConstant, kStep };
  Kind kind = Kind::kConstant;
  double base = 3e-3;
  int step_every = 10;
  double gamma = 0.5;

  double at_epoch(int epoch) const {  // epoch is 0-based
    if (kind == Kind::kConstant) return base;
    double lr = base;
    for (int e = step_every; e <= epoch; e += step_every) lr *= gamma;
    return lr;
  }

  std::string descriptor() const {
    std::ostringstream os;
    if (kind == Kind::kConstant) {
      os << "constant:" << base;
    } else {
      os << "step:" << base << ":" << step_every << ":" << gamma;
    }
    return os.str();
  }

  static LrSchedule parse(const std::string& text) {
    LrSchedule s;
    std::istringstream is(text);
    std::string kind;
    std::getline(is, kind, ':');
    if (kind == "constant") {
      s.kind = Kind::kConstant;
      std::string v;
      std::getline(is, v);
      s.base = std::stod(v);
    } else if (kind == "step") {
      s.kind = Kind::kStep;
      std::string v;
      std::getline(is, v, ':');
      s.base = std::stod(v);
      std::getline(is, v, ':');
      s.step_every = std::stoi(v);
      std::getline(is, v);
      s.gamma = std::stod(v);
      require(s.step_every > 0, "lr schedule: step interval must be > 0");
    } else {
      throw ConfigError("unknown lr schedule kind: " + kind);
    }
    require(s.base > 0.0, "lr schedule: base rate must be > 0");
    return s;
  }
};

// The paper leaves the training hyperparameters open, so they all live here
// instead of being hard-coded. rng_seed fully determines weight init and
// data shuffling; patience == 0 disables early stopping.
struct TrainingRecipe {
  InitStrategy init = InitStrategy::kScratch;
  std::string surrogate_dataset;  // required iff init == kTransfer
  int epochs = 30;
  int batch_size = 32;
  LrSchedule lr{};
  int patience = 6;
  Optimizer optimizer = Optimizer::kAdam;
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (init == InitStrategy::kTransfer && surrogate_dataset.empty())
      throw ConfigError("recipe: transfer init requires a surrogate dataset");
    require(epochs >= 0, "recipe: epochs must be >= 0");
    require(batch_size > 0, "recipe: batch size must be > 0");
    require(patience >= 0, "recipe: patience must be >= 0");
  }

  std::string digest() const {
    Fnv1a h;
    h.update(to_string(init));
    h.update(surrogate_dataset);
    h.update(lr.descriptor());
    h.update(to_string(optimizer));
    h.update_value(epochs);
    h.update_value(batch_size);
    h.update_value(patience);
    h.update_value(rng_seed);
    return h.hex();
  }
};

}  // namespace mexkit::models
