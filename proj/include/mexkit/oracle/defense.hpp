#pragma once

#include <cmath>
#include <string>

#include "mexkit/common.hpp"
#include "mexkit/models/classifier.hpp"

namespace mexkit::oracle {

enum class DefenseKind { kNone, kInputPerturbation, kRegionBased };

inline const char* to_string(DefenseKind k) {
  switch (k) {
    case DefenseKind::kNone: return "none";
    case DefenseKind::kInputPerturbation: return "input-perturbation";
    case DefenseKind::kRegionBased: return "region-based";
  }
  return "?";
}

inline DefenseKind defense_kind_from_string(const std::string& s) {
  if (s == "none") return DefenseKind::kNone;
  if (s == "input-perturbation") return DefenseKind::kInputPerturbation;
  if (s == "region-based") return DefenseKind::kRegionBased;
  throw ConfigError("unknown defense kind: " + s);
}

// Deployed label-perturbation defense. The rng seed is part of the spec and
// the per-query noise is derived from (seed, input content), so a defended
// model answers repeated queries on the same input identically and whole
// runs replay exactly.
struct DefenseSpec {
  DefenseKind kind = DefenseKind::kNone;
  double noise_scale = 0.0;    // input-perturbation sigma
  double region_radius = 0.0;  // L-inf half-width of the voting region
  int region_samples = 8;
  double calibrated_flip_rate = 0.0;
  std::uint64_t rng_seed = 0;
};

namespace detail {

inline std::uint64_t content_hash(const Eigen::Ref<const models::Vec>& x,
                                  std::uint64_t seed) {
  Fnv1a h;
  h.update_value(seed);
  h.update(x.data(), static_cast<std::size_t>(x.size()) * sizeof(float));
  return h.digest();
}

}  // namespace detail

// Label from the defended target for one input.
inline int defended_label(const models::Classifier& target,
                          const DefenseSpec& d,
                          const Eigen::Ref<const models::Vec>& x) {
  switch (d.kind) {
    case DefenseKind::kNone:
      return target.predict_one(x);
    case DefenseKind::kInputPerturbation: {
      auto rng = std::mt19937_64(detail::content_hash(x, d.rng_seed));
      std::normal_distribution<float> gauss(0.0f,
                                            static_cast<float>(d.noise_scale));
      models::Vec noisy = x;
      for (Eigen::Index i = 0; i < noisy.size(); ++i)
        noisy[i] = std::clamp(noisy[i] + gauss(rng), 0.0f, 1.0f);
      return target.predict_one(noisy);
    }
    case DefenseKind::kRegionBased: {
      require(d.region_samples >= 1, "defense: region_samples must be >= 1");
      auto rng = std::mt19937_64(detail::content_hash(x, d.rng_seed));
      std::uniform_real_distribution<float> u(
          -static_cast<float>(d.region_radius),
          static_cast<float>(d.region_radius));
      std::vector<int> votes(static_cast<std::size_t>(target.class_count()), 0);
      models::Vec probe(x.size());
      for (int s = 0; s < d.region_samples; ++s) {
        for (Eigen::Index i = 0; i < x.size(); ++i)
          probe[i] = std::clamp(x[i] + u(rng), 0.0f, 1.0f);
        votes[static_cast<std::size_t>(target.predict_one(probe))]++;
      }
      int best = 0;
      for (int c = 1; c < target.class_count(); ++c)
        if (votes[static_cast<std::size_t>(c)] >
            votes[static_cast<std::size_t>(best)])
          best = c;  // ties keep the lowest class index
      return best;
    }
  }
  throw Error("defense: bad kind");
}

// Fraction of probe inputs whose defended label differs from the raw label.
inline double measure_flip_rate(const models::Classifier& target,
                                const DefenseSpec& d,
                                const core::LabeledDataset& probe) {
  int flips = 0;
  for (int i = 0; i < probe.size(); ++i) {
    const int raw = target.predict_one(probe.image(i));
    if (defended_label(target, d, probe.image(i)) != raw) ++flips;
  }
  return static_cast<double>(flips) / probe.size();
}

// Defender-side calibration: binary search over noise_scale (input
// perturbation) or region_radius (region based) until the measured probe
// flip rate lands within +/-0.005 of target_flip. Does not touch any
// attacker ledger.
inline DefenseSpec calibrate_defense(const models::Classifier& target,
                                     DefenseKind kind,
                                     const core::LabeledDataset& probe,
                                     double target_flip,
                                     std::uint64_t rng_seed) {
  require(!probe.empty(), "calibrate: probe must be non-empty");
  require(target_flip > 0.0 && target_flip <= 0.05,
          "calibrate: target flip rate must be in (0, 0.05]");
  if (kind == DefenseKind::kNone)
    throw CalibrationFailed("calibrate: nothing to calibrate for kind=none");

  const double tol = 0.005;
  DefenseSpec spec;
  spec.kind = kind;
  spec.rng_seed = rng_seed;

  auto rate_at = [&](double param) {
    DefenseSpec s = spec;
    if (kind == DefenseKind::kInputPerturbation)
      s.noise_scale = param;
    else
      s.region_radius = param;
    return measure_flip_rate(target, s, probe);
  };

  double lo = 0.0, hi = 0.05;
  double rate_hi = rate_at(hi);
  int expansions = 0;
  while (rate_hi < target_flip && expansions < 8) {
    hi *= 2.0;
    rate_hi = rate_at(hi);
    ++expansions;
  }
  if (rate_hi < target_flip - tol)
    throw CalibrationFailed(
        "calibrate: flip rate unreachable within search bounds");

  double best_param = hi, best_rate = rate_hi;
  for (int iter = 0; iter < 30; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double r = rate_at(mid);
    if (std::abs(r - target_flip) < std::abs(best_rate - target_flip)) {
      best_rate = r;
      best_param = mid;
    }
    if (std::abs(r - target_flip) <= tol) break;
    if (r < target_flip)
      lo = mid;
    else
      hi = mid;
  }
  if (std::abs(best_rate - target_flip) > tol)
    throw CalibrationFailed("calibrate: search did not reach target window");

  if (kind == DefenseKind::kInputPerturbation)
    spec.noise_scale = best_param;
  else
    spec.region_radius = best_param;
  spec.calibrated_flip_rate = best_rate;
  return spec;
}

}  // namespace mexkit::oracle
