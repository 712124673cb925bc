#pragma once

#include <cmath>
#include <string>

#include "mexkit/common.hpp"
#include "mexkit/core/dataset.hpp"

namespace mexkit::exp {

// Procedural desk-scale image corpus: six glyph classes rendered onto small
// grayscale canvases with per-sample jitter and pixel noise. Three attacker
// tiers share the class semantics but differ in rendering statistics:
//
//   original                  - the target's own distribution
//   problem-domain-shifted    - same classes, noisier and lower contrast
//                               (harder than the original data)
//   distribution-shifted-surrogate - recolored near-prototype renderings
//                               (cleaner and simpler than the original data)
//
// A separate glyph family (make_pretrain_dataset) provides a class-disjoint
// corpus for transfer-learning surrogates.

enum class DataTier {
  kOriginal,
  kProblemDomainShifted,
  kDistributionShiftedSurrogate,
};

inline const char* to_string(DataTier t) {
  switch (t) {
    case DataTier::kOriginal: return "original-subset";
    case DataTier::kProblemDomainShifted: return "problem-domain-shifted";
    case DataTier::kDistributionShiftedSurrogate:
      return "distribution-shifted-surrogate";
  }
  return "?";
}

inline DataTier tier_from_string(const std::string& s) {
  if (s == "original-subset") return DataTier::kOriginal;
  if (s == "problem-domain-shifted") return DataTier::kProblemDomainShifted;
  if (s == "distribution-shifted-surrogate")
    return DataTier::kDistributionShiftedSurrogate;
  throw ConfigError("unknown data tier: " + s);
}

struct CorpusSpec {
  core::ImageShape shape{16, 16, 1};
  int class_count = 6;  // <= 6 glyphs per family
  std::uint64_t seed = 1;
  float difficulty = 1.0f;  // scales the original tier's pixel noise
};

namespace detail {

struct TierParams {
  float noise;
  float fg_lo, fg_hi;
  float bg_lo, bg_hi;
  float jitter;          // center displacement, in 16-unit canvas coords
  float scale_lo, scale_hi;
  float recolor_shift;   // additive brightness remap
};

inline TierParams tier_params(DataTier tier, float difficulty) {
  switch (tier) {
    case DataTier::kOriginal:
      return {0.16f * difficulty, 0.62f, 1.00f, 0.00f, 0.30f,
              2.0f,  0.85f, 1.15f, 0.0f};
    case DataTier::kProblemDomainShifted:
      return {0.24f * difficulty, 0.50f, 0.85f, 0.10f, 0.40f,
              2.5f,  0.75f, 1.25f, 0.0f};
    case DataTier::kDistributionShiftedSurrogate:
      return {0.03f, 0.90f, 1.00f, 0.05f, 0.15f,
              0.5f,  0.95f, 1.05f, 0.06f};
  }
  throw ConfigError("bad tier");
}

inline float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }
inline float soft(float signed_dist) {  // 1 inside, 0 outside, ~1px edge
  return clamp01(signed_dist + 0.5f);
}

// Glyph masks in a 16x16 reference frame centered at (cx, cy); s scales size.
// family 0 is the main corpus, family 1 the pretraining corpus.
inline float glyph_mask(int family, int cls, float x, float y, float cx,
                        float cy, float s, float p1, float p2) {
  const float dx = x - cx, dy = y - cy;
  const float d = std::sqrt(dx * dx + dy * dy);
  if (family == 0) {
    switch (cls) {
      case 0: {  // filled disk
        return soft(s * (3.9f + p1) - d);
      }
      case 1: {  // ring
        const float router = s * (4.6f + p1);
        const float rinner = router - s * (1.9f + 0.4f * p2);
        return soft(std::min(router - d, d - rinner));
      }
      case 2: {  // plus / cross
        const float t = s * (1.3f + 0.4f * p2), a = s * (5.2f + p1);
        const float h = std::min(t - std::abs(dy), a - std::abs(dx));
        const float v = std::min(t - std::abs(dx), a - std::abs(dy));
        return soft(std::max(h, v));
      }
      case 3: {  // diagonal stripes
        const float period = s * (4.0f + p1);
        const float dir = p2 >= 0.0f ? 1.0f : -1.0f;
        float u = (x + dir * y) + p2 * period;
        u -= period * std::floor(u / period);
        return soft(std::min(u, period * 0.5f - (u - period * 0.5f)) -
                    period * 0.25f);
      }
      case 4: {  // checkerboard
        const float cell = s * (3.0f + 0.5f * p1);
        const int qx = static_cast<int>(std::floor((x + p2 * cell) / cell));
        const int qy = static_cast<int>(std::floor((y + 0.3f * p2 * cell) / cell));
        return ((qx + qy) & 1) != 0 ? 1.0f : 0.0f;
      }
      default: {  // two horizontal bars
        const float t = s * (1.4f + 0.3f * p2);
        const float gap = s * (4.4f + p1);
        const float b1 = t - std::abs(dy - gap * 0.5f);
        const float b2 = t - std::abs(dy + gap * 0.5f);
        return soft(std::max(b1, b2));
      }
    }
  }
  // pretraining family: disjoint glyph set
  switch (cls) {
    case 0: {  // filled triangle, apex up
      const float hgt = s * (4.8f + p1);
      const float rel = (dy + hgt * 0.5f) / hgt;  // 0 at apex, 1 at base
      if (rel < 0.0f || rel > 1.0f) return 0.0f;
      return soft(rel * hgt * 0.75f - std::abs(dx));
    }
    case 1: {  // X cross
      const float t = s * (1.2f + 0.3f * p2), a = s * (5.0f + p1);
      const float u = std::abs(dx - dy) * 0.7071f, v = std::abs(dx + dy) * 0.7071f;
      const float d1 = std::min(t - u, a - v);
      const float d2 = std::min(t - v, a - u);
      return soft(std::max(d1, d2));
    }
    case 2: {  // single vertical bar
      const float t = s * (1.6f + 0.4f * p2), a = s * (5.4f + p1);
      return soft(std::min(t - std::abs(dx), a - std::abs(dy)));
    }
    case 3: {  // diamond outline
      const float r = s * (4.8f + p1);
      const float m = std::abs(dx) + std::abs(dy);
      return soft(std::min(r - m, m - (r - s * 2.0f)));
    }
    case 4: {  // dot grid
      const float cell = s * (4.0f + 0.5f * p1);
      float ux = dx - cell * std::round(dx / cell);
      float uy = dy - cell * std::round(dy / cell);
      return soft(s * 1.3f - std::sqrt(ux * ux + uy * uy));
    }
    default: {  // corner L
      const float t = s * (1.5f + 0.3f * p2), a = s * (5.0f + p1);
      const float h = std::min(t - std::abs(dy - a * 0.5f),
                               a - std::abs(dx));
      const float v = std::min(t - std::abs(dx + a * 0.5f),
                               a - std::abs(dy));
      return soft(std::max(h, v));
    }
  }
}

inline core::LabeledDataset render_corpus(const CorpusSpec& spec, int family,
                                          const TierParams& tp,
                                          core::DatasetRole role, int count,
                                          const std::string& name,
                                          std::uint64_t stream) {
  require(count > 0, "corpus: count must be positive");
  require(spec.class_count >= 2 && spec.class_count <= 6,
          "corpus: class_count must be in [2,6]");
  const int h = spec.shape.height, w = spec.shape.width;
  require(spec.shape.channels == 1, "corpus: grayscale only");

  auto rng = make_rng(spec.seed, stream);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  std::uniform_int_distribution<int> class_d(0, spec.class_count - 1);

  const float ux = static_cast<float>(w) / 16.0f;
  const float uy = static_cast<float>(h) / 16.0f;

  Eigen::MatrixXf images(spec.shape.size(), count);
  std::vector<int> labels(static_cast<std::size_t>(count));

  for (int i = 0; i < count; ++i) {
    const int cls = class_d(rng);
    labels[static_cast<std::size_t>(i)] = cls;
    const float fg = tp.fg_lo + (tp.fg_hi - tp.fg_lo) * unit(rng);
    const float bg = tp.bg_lo + (tp.bg_hi - tp.bg_lo) * unit(rng);
    const float cx = 8.0f + tp.jitter * (2.0f * unit(rng) - 1.0f);
    const float cy = 8.0f + tp.jitter * (2.0f * unit(rng) - 1.0f);
    const float s = tp.scale_lo + (tp.scale_hi - tp.scale_lo) * unit(rng);
    const float p1 = 2.0f * unit(rng) - 1.0f;
    const float p2 = 2.0f * unit(rng) - 1.0f;

    for (int py = 0; py < h; ++py) {
      for (int px = 0; px < w; ++px) {
        // map pixel to the 16x16 reference frame
        const float gx = (static_cast<float>(px) + 0.5f) / ux;
        const float gy = (static_cast<float>(py) + 0.5f) / uy;
        const float m = glyph_mask(family, cls, gx, gy, cx, cy, s, p1, p2);
        float v = bg + (fg - bg) * m;
        v += tp.noise * gauss(rng);
        v += tp.recolor_shift;
        images(py * w + px, i) = clamp01(v);
      }
    }
  }
  return core::LabeledDataset(name, spec.shape, std::move(images),
                              std::move(labels), role, spec.class_count);
}

}  // namespace detail

inline core::LabeledDataset make_dataset(const CorpusSpec& spec, DataTier tier,
                                         core::DatasetRole role, int count,
                                         const std::string& name) {
  const auto tp = detail::tier_params(tier, spec.difficulty);
  const std::uint64_t stream =
      fnv1a(std::string(to_string(tier)) + "/" + core::to_string(role) + "/" +
            name);
  return detail::render_corpus(spec, /*family=*/0, tp, role, count, name,
                               stream);
}

// Class-disjoint corpus used to pretrain transfer-learning substitutes.
inline core::LabeledDataset make_pretrain_dataset(const CorpusSpec& spec,
                                                  core::DatasetRole role,
                                                  int count,
                                                  const std::string& name) {
  const auto tp = detail::tier_params(DataTier::kOriginal, spec.difficulty);
  const std::uint64_t stream =
      fnv1a(std::string("pretrain/") + core::to_string(role) + "/" + name);
  return detail::render_corpus(spec, /*family=*/1, tp, role, count, name,
                               stream);
}

}  // namespace mexkit::exp
