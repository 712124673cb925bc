#pragma once

#include <string>

#include "mexkit/common.hpp"
#include "mexkit/models/network.hpp"

namespace mexkit::models {

// Desk-scale zoo. Parameter counts keep the compact < residual-small <
// residual-large ordering at roughly a 2x step between the residual nets.
enum class ArchFamily { kCompactCnn, kResidualSmall, kResidualLarge };

inline const char* to_string(ArchFamily f) {
  switch (f) {
    case ArchFamily::kCompactCnn: return "compact-cnn";
    case ArchFamily::kResidualSmall: return "residual-small";
    case ArchFamily::kResidualLarge: return "residual-large";
  }
  return "?";
}

inline ArchFamily arch_family_from_string(const std::string& s) {
  if (s == "compact-cnn") return ArchFamily::kCompactCnn;
  if (s == "residual-small") return ArchFamily::kResidualSmall;
  if (s == "residual-large") return ArchFamily::kResidualLarge;
  throw ConfigError("unknown architecture family: " + s);
}

struct ArchitectureSpec {
  std::string name;
  ArchFamily family = ArchFamily::kCompactCnn;
  core::ImageShape input_shape{16, 16, 1};

  bool operator==(const ArchitectureSpec&) const = default;
};

namespace detail {

inline ConvLayer make_conv(core::ImageShape in, int cout, bool relu) {
  ConvLayer l;
  l.in = in;
  l.out_channels = cout;
  l.relu = relu;
  l.W.setZero(cout, 9 * in.channels);
  l.b.setZero(cout, 1);
  return l;
}

inline ResidualLayer make_res(core::ImageShape in) {
  ResidualLayer l;
  l.in = in;
  l.W1.setZero(in.channels, 9 * in.channels);
  l.b1.setZero(in.channels, 1);
  l.W2.setZero(in.channels, 9 * in.channels);
  l.b2.setZero(in.channels, 1);
  return l;
}

inline DenseLayer make_dense(int in, int out, bool relu) {
  DenseLayer l;
  l.in = in;
  l.out = out;
  l.relu = relu;
  l.W.setZero(out, in);
  l.b.setZero(out, 1);
  return l;
}

}  // namespace detail

// Uninitialized network of the given family; weights are zero until
// init_weights or a checkpoint fills them.
inline Network build_network(const ArchitectureSpec& arch, int class_count) {
  const auto in = arch.input_shape;
  require(in.height % 4 == 0 && in.width % 4 == 0,
          "architecture: spatial dims must be divisible by 4");
  require(class_count >= 2, "architecture: need at least two classes");

  Network net;
  net.input_dim = in.size();
  net.num_classes = class_count;
  auto half = [](core::ImageShape s) {
    return core::ImageShape{s.height / 2, s.width / 2, s.channels};
  };

  switch (arch.family) {
    case ArchFamily::kCompactCnn: {
      core::ImageShape s1{in.height, in.width, 8};
      net.layers.push_back(detail::make_conv(in, 8, true));
      net.layers.push_back(AvgPoolLayer{s1});
      core::ImageShape s2 = half(s1);
      s2.channels = 8;
      net.layers.push_back(detail::make_conv(s2, 12, true));
      core::ImageShape s3{s2.height, s2.width, 12};
      net.layers.push_back(AvgPoolLayer{s3});
      const int flat = (s3.height / 2) * (s3.width / 2) * 12;
      net.layers.push_back(detail::make_dense(flat, 32, true));
      net.layers.push_back(detail::make_dense(32, class_count, false));
      net.embed_dim = 32;
      break;
    }
    case ArchFamily::kResidualSmall: {
      core::ImageShape s1{in.height, in.width, 12};
      net.layers.push_back(detail::make_conv(in, 12, true));
      net.layers.push_back(detail::make_res(s1));
      net.layers.push_back(AvgPoolLayer{s1});
      core::ImageShape s2 = half(s1);
      net.layers.push_back(detail::make_res(s2));
      net.layers.push_back(AvgPoolLayer{s2});
      core::ImageShape s3 = half(s2);
      const int flat = s3.size();
      net.layers.push_back(detail::make_dense(flat, 40, true));
      net.layers.push_back(detail::make_dense(40, class_count, false));
      net.embed_dim = 40;
      break;
    }
    case ArchFamily::kResidualLarge: {
      core::ImageShape s1{in.height, in.width, 16};
      net.layers.push_back(detail::make_conv(in, 16, true));
      net.layers.push_back(detail::make_res(s1));
      net.layers.push_back(AvgPoolLayer{s1});
      core::ImageShape s2 = half(s1);
      net.layers.push_back(detail::make_res(s2));
      net.layers.push_back(AvgPoolLayer{s2});
      core::ImageShape s3 = half(s2);
      net.layers.push_back(detail::make_res(s3));
      const int flat = s3.size();
      net.layers.push_back(detail::make_dense(flat, 64, true));
      net.layers.push_back(detail::make_dense(64, class_count, false));
      net.embed_dim = 64;
      break;
    }
  }
  return net;
}

inline std::size_t parameter_count(const ArchitectureSpec& arch,
                                   int class_count) {
  return build_network(arch, class_count).param_count();
}

inline int embed_dim(const ArchitectureSpec& arch) {
  switch (arch.family) {
    case ArchFamily::kCompactCnn: return 32;
    case ArchFamily::kResidualSmall: return 40;
    case ArchFamily::kResidualLarge: return 64;
  }
  return 0;
}

}  // namespace mexkit::models
