#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mexkit {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Error types. Degenerate inputs raise; no sentinel values, no NaN returns.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Preconditions violated by the caller (length mismatch, bad shapes, ...).
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

// Attack / experiment configuration that fails validation.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Metric decomposition with a zero denominator (target accuracy 0 or 1).
class UndefinedDecomposition : public Error {
 public:
  explicit UndefinedDecomposition(const std::string& msg) : Error(msg) {}
};

// Query would exceed the oracle budget. The ledger is left unchanged.
class BudgetExhausted : public Error {
 public:
  explicit BudgetExhausted(const std::string& msg) : Error(msg) {}
};

// Defense calibration could not reach the requested flip rate.
class CalibrationFailed : public Error {
 public:
  explicit CalibrationFailed(const std::string& msg) : Error(msg) {}
};

// Adversarial crafting produced non-finite values; caller skips the sample.
class CraftingFailed : public Error {
 public:
  explicit CraftingFailed(const std::string& msg) : Error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

// ---------------------------------------------------------------------------
// Deterministic seeding. Every stochastic component derives its generator
// from a user seed plus a fixed stream tag, so runs replay exactly.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(~stream));
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(mix_seed(seed, stream));
}

// FNV-1a, used for config digests and replay-trace fingerprints.
class Fnv1a {
 public:
  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }
  template <typename T>
  void update_value(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    update(&v, sizeof(T));
  }
  std::uint64_t digest() const { return state_; }
  std::string hex() const {
    static const char* k = "0123456789abcdef";
    std::string out(16, '0');
    std::uint64_t v = state_;
    for (int i = 15; i >= 0; --i) {
      out[static_cast<std::size_t>(i)] = k[v & 0xf];
      v >>= 4;
    }
    return out;
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(std::string_view s) {
  Fnv1a h;
  h.update(s);
  return h.digest();
}

// Fisher-Yates draw of `n` distinct values from [0, pool) using `rng`.
inline std::vector<int> sample_without_replacement(int pool, int n,
                                                   std::mt19937_64& rng) {
  require(n >= 0 && n <= pool, "sample_without_replacement: n out of range");
  std::vector<int> idx(static_cast<std::size_t>(pool));
  for (int i = 0; i < pool; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < n; ++i) {
    std::uniform_int_distribution<int> d(i, pool - 1);
    std::swap(idx[static_cast<std::size_t>(i)],
              idx[static_cast<std::size_t>(d(rng))]);
  }
  idx.resize(static_cast<std::size_t>(n));
  return idx;
}

}  // namespace mexkit
