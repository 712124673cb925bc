#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include "mexkit/common.hpp"
#include "mexkit/core/dataset.hpp"

namespace mexkit::models {

using Mat = Eigen::MatrixXf;
using Vec = Eigen::VectorXf;

// Small feed-forward nets on HWC-flattened images. Everything is plain
// value types; forward passes allocate their scratch locally, so a const
// Network can serve any number of threads at once.

// 3x3 convolution, stride 1, zero padding, optional fused ReLU.
// W is (out_channels x 9*in_channels), b is (out_channels x 1).
struct ConvLayer {
  core::ImageShape in;
  int out_channels = 0;
  bool relu = true;
  Mat W;
  Mat b;
};

// 2x2 average pooling, stride 2. Requires even spatial dims.
struct AvgPoolLayer {
  core::ImageShape in;
};

// y = relu(x + conv2(relu(conv1(x)))), both convs channel-preserving 3x3.
struct ResidualLayer {
  core::ImageShape in;
  Mat W1, b1;
  Mat W2, b2;
};

// Fully connected, optional fused ReLU. W is (out x in), b is (out x 1).
struct DenseLayer {
  int in = 0;
  int out = 0;
  bool relu = false;
  Mat W;
  Mat b;
};

using Layer = std::variant<ConvLayer, AvgPoolLayer, ResidualLayer, DenseLayer>;

namespace detail {

// Patch matrix for 3x3 same-padding conv: (9*cin x h*w), column per pixel.
inline void im2col3x3(const core::ImageShape& s, const float* x, Mat& patches) {
  const int h = s.height, w = s.width, cin = s.channels;
  patches.setZero(9 * cin, h * w);
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const int col = py * w + px;
      for (int ky = -1; ky <= 1; ++ky) {
        const int sy = py + ky;
        if (sy < 0 || sy >= h) continue;
        for (int kx = -1; kx <= 1; ++kx) {
          const int sx = px + kx;
          if (sx < 0 || sx >= w) continue;
          const int row0 = ((ky + 1) * 3 + (kx + 1)) * cin;
          const int src0 = (sy * w + sx) * cin;
          for (int ci = 0; ci < cin; ++ci)
            patches(row0 + ci, col) = x[src0 + ci];
        }
      }
    }
  }
}

// Adjoint of im2col3x3: scatter patch gradients back onto the input image.
inline void col2im3x3(const core::ImageShape& s, const Mat& gpatches,
                      float* gx) {
  const int h = s.height, w = s.width, cin = s.channels;
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const int col = py * w + px;
      for (int ky = -1; ky <= 1; ++ky) {
        const int sy = py + ky;
        if (sy < 0 || sy >= h) continue;
        for (int kx = -1; kx <= 1; ++kx) {
          const int sx = px + kx;
          if (sx < 0 || sx >= w) continue;
          const int row0 = ((ky + 1) * 3 + (kx + 1)) * cin;
          const int dst0 = (sy * w + sx) * cin;
          for (int ci = 0; ci < cin; ++ci)
            gx[dst0 + ci] += gpatches(row0 + ci, col);
        }
      }
    }
  }
}

// y[(p)*cout + co] = (W * patches)(co, p) + b(co); optional ReLU.
inline void conv_forward(const core::ImageShape& in, int cout, const Mat& W,
                         const Mat& b, bool relu, const Vec& x, Vec& y) {
  Mat patches;
  im2col3x3(in, x.data(), patches);
  const int hw = in.height * in.width;
  y.resize(hw * cout);
  Eigen::Map<Mat> ym(y.data(), cout, hw);
  ym.noalias() = W * patches;
  ym.colwise() += b.col(0);
  if (relu) y = y.cwiseMax(0.0f);
}

// Given gy on the (possibly ReLU-masked) output, accumulates gW/gb when
// non-null and, when gx != nullptr, adds the input gradient into *gx.
inline void conv_backward(const core::ImageShape& in, int cout, const Mat& W,
                          const Vec& x, const Vec& gy, Mat* gW, Mat* gb,
                          Vec* gx) {
  const int hw = in.height * in.width;
  Eigen::Map<const Mat> gym(gy.data(), cout, hw);
  if (gW != nullptr) {
    Mat patches;
    im2col3x3(in, x.data(), patches);
    gW->noalias() += gym * patches.transpose();
    gb->col(0).noalias() += gym.rowwise().sum();
  }
  if (gx != nullptr) {
    Mat gpatches(W.cols(), hw);
    gpatches.noalias() = W.transpose() * gym;
    col2im3x3(in, gpatches, gx->data());
  }
}

inline void relu_mask(const Vec& post, Vec& grad) {
  for (Eigen::Index i = 0; i < grad.size(); ++i)
    if (post[i] <= 0.0f) grad[i] = 0.0f;
}

}  // namespace detail

class Network {
 public:
  std::vector<Layer> layers;
  int input_dim = 0;
  int num_classes = 0;
  int embed_dim = 0;  // width of the input to the final dense head

  // Per-sample activation record used by backward().
  struct Trace {
    std::vector<Vec> in;   // input of each layer; in[i+1] is layer i's output
    std::vector<Vec> mid;  // residual-branch activations, empty otherwise
    Vec logits;
  };

  Vec forward(const Eigen::Ref<const Vec>& x, Trace* trace = nullptr) const {
    require(x.size() == input_dim, "network: input dimension mismatch");
    if (trace != nullptr) {
      trace->in.assign(layers.size() + 1, Vec());
      trace->mid.assign(layers.size(), Vec());
    }
    Vec cur = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (trace != nullptr) trace->in[i] = cur;
      Vec next;
      std::visit(
          [&](const auto& layer) {
            using T = std::decay_t<decltype(layer)>;
            if constexpr (std::is_same_v<T, ConvLayer>) {
              detail::conv_forward(layer.in, layer.out_channels, layer.W,
                                   layer.b, layer.relu, cur, next);
            } else if constexpr (std::is_same_v<T, AvgPoolLayer>) {
              pool_forward(layer, cur, next);
            } else if constexpr (std::is_same_v<T, ResidualLayer>) {
              Vec mid;
              detail::conv_forward(layer.in, layer.in.channels, layer.W1,
                                   layer.b1, true, cur, mid);
              detail::conv_forward(layer.in, layer.in.channels, layer.W2,
                                   layer.b2, false, mid, next);
              next += cur;
              next = next.cwiseMax(0.0f);
              if (trace != nullptr) trace->mid[i] = std::move(mid);
            } else {
              next.noalias() = layer.W * cur;
              next += layer.b.col(0);
              if (layer.relu) next = next.cwiseMax(0.0f);
            }
          },
          layers[i]);
      cur = std::move(next);
    }
    if (trace != nullptr) {
      trace->in[layers.size()] = cur;
      trace->logits = cur;
    }
    return cur;
  }

  // Backpropagates dlogits. When grads != nullptr its parameters accumulate
  // d(loss)/d(param); when dinput != nullptr receives d(loss)/d(x).
  void backward(const Trace& trace, const Vec& dlogits, Network* grads,
                Vec* dinput) const {
    Vec g = dlogits;
    for (int li = static_cast<int>(layers.size()) - 1; li >= 0; --li) {
      const auto i = static_cast<std::size_t>(li);
      const Vec& in = trace.in[i];
      const Vec& out = trace.in[i + 1];
      const bool need_dx = (li > 0) || (dinput != nullptr);
      Vec gin;
      std::visit(
          [&](const auto& layer) {
            using T = std::decay_t<decltype(layer)>;
            if constexpr (std::is_same_v<T, ConvLayer>) {
              if (layer.relu) detail::relu_mask(out, g);
              if (need_dx) gin = Vec::Zero(in.size());
              auto* gl = grads != nullptr
                             ? &std::get<ConvLayer>(grads->layers[i])
                             : nullptr;
              detail::conv_backward(layer.in, layer.out_channels, layer.W, in,
                                    g, gl != nullptr ? &gl->W : nullptr,
                                    gl != nullptr ? &gl->b : nullptr,
                                    need_dx ? &gin : nullptr);
            } else if constexpr (std::is_same_v<T, AvgPoolLayer>) {
              if (need_dx) pool_backward(layer, g, gin);
            } else if constexpr (std::is_same_v<T, ResidualLayer>) {
              detail::relu_mask(out, g);
              const Vec& mid = trace.mid[i];
              Vec gmid = Vec::Zero(mid.size());
              auto* gl = grads != nullptr
                             ? &std::get<ResidualLayer>(grads->layers[i])
                             : nullptr;
              detail::conv_backward(layer.in, layer.in.channels, layer.W2, mid,
                                    g, gl != nullptr ? &gl->W2 : nullptr,
                                    gl != nullptr ? &gl->b2 : nullptr, &gmid);
              detail::relu_mask(mid, gmid);
              if (need_dx) gin = g;  // skip connection
              detail::conv_backward(layer.in, layer.in.channels, layer.W1, in,
                                    gmid, gl != nullptr ? &gl->W1 : nullptr,
                                    gl != nullptr ? &gl->b1 : nullptr,
                                    need_dx ? &gin : nullptr);
            } else {
              if (layer.relu) detail::relu_mask(out, g);
              if (grads != nullptr) {
                auto& gl = std::get<DenseLayer>(grads->layers[i]);
                gl.W.noalias() += g * in.transpose();
                gl.b.col(0) += g;
              }
              if (need_dx) gin.noalias() = layer.W.transpose() * g;
            }
          },
          layers[i]);
      if (!need_dx) return;
      g = std::move(gin);
    }
    if (dinput != nullptr) *dinput = std::move(g);
  }

  // Activation entering the final dense head.
  Vec embed(const Eigen::Ref<const Vec>& x) const {
    require(!layers.empty(), "network: empty");
    require(x.size() == input_dim, "network: input dimension mismatch");
    Vec cur = x;
    for (std::size_t i = 0; i + 1 < layers.size(); ++i)
      cur = apply_layer(layers[i], cur);
    return cur;
  }

  int argmax_label(const Eigen::Ref<const Vec>& x) const {
    Vec z = forward(x);
    int best = 0;
    for (int c = 1; c < num_classes; ++c)
      if (z[c] > z[best]) best = c;  // ties keep the lowest class index
    return best;
  }

  // d logits[cls] / d x.
  Vec input_gradient(const Eigen::Ref<const Vec>& x, int cls) const {
    require(cls >= 0 && cls < num_classes, "network: class index out of range");
    Trace tr;
    forward(x, &tr);
    Vec dlogits = Vec::Zero(num_classes);
    dlogits[cls] = 1.0f;
    Vec dx;
    backward(tr, dlogits, nullptr, &dx);
    return dx;
  }

  std::vector<Mat*> param_list() {
    std::vector<Mat*> out;
    for (auto& layer : layers) {
      std::visit(
          [&](auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, ConvLayer>) {
              out.push_back(&l.W);
              out.push_back(&l.b);
            } else if constexpr (std::is_same_v<T, ResidualLayer>) {
              out.push_back(&l.W1);
              out.push_back(&l.b1);
              out.push_back(&l.W2);
              out.push_back(&l.b2);
            } else if constexpr (std::is_same_v<T, DenseLayer>) {
              out.push_back(&l.W);
              out.push_back(&l.b);
            }
          },
          layer);
    }
    return out;
  }
  std::vector<const Mat*> param_list() const {
    auto mut = const_cast<Network*>(this)->param_list();
    return std::vector<const Mat*>(mut.begin(), mut.end());
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto* p : param_list()) n += static_cast<std::size_t>(p->size());
    return n;
  }

  void set_zero() {
    for (auto* p : param_list()) p->setZero();
  }

  std::vector<float> flatten_params() const {
    std::vector<float> flat;
    flat.reserve(param_count());
    for (const auto* p : param_list())
      flat.insert(flat.end(), p->data(), p->data() + p->size());
    return flat;
  }

  void load_params(const std::vector<float>& flat) {
    require(flat.size() == param_count(), "network: parameter blob size");
    std::size_t off = 0;
    for (auto* p : param_list()) {
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                flat.begin() + static_cast<std::ptrdiff_t>(off) +
                    p->size(),
                p->data());
      off += static_cast<std::size_t>(p->size());
    }
  }

 private:
  static void pool_forward(const AvgPoolLayer& layer, const Vec& x, Vec& y) {
    const int h = layer.in.height, w = layer.in.width, c = layer.in.channels;
    const int h2 = h / 2, w2 = w / 2;
    y.setZero(h2 * w2 * c);
    for (int oy = 0; oy < h2; ++oy)
      for (int ox = 0; ox < w2; ++ox)
        for (int ci = 0; ci < c; ++ci) {
          float s = x[((2 * oy) * w + 2 * ox) * c + ci] +
                    x[((2 * oy) * w + 2 * ox + 1) * c + ci] +
                    x[((2 * oy + 1) * w + 2 * ox) * c + ci] +
                    x[((2 * oy + 1) * w + 2 * ox + 1) * c + ci];
          y[(oy * w2 + ox) * c + ci] = 0.25f * s;
        }
  }

  static void pool_backward(const AvgPoolLayer& layer, const Vec& gy,
                            Vec& gx) {
    const int h = layer.in.height, w = layer.in.width, c = layer.in.channels;
    const int h2 = h / 2, w2 = w / 2;
    gx.setZero(h * w * c);
    for (int oy = 0; oy < h2; ++oy)
      for (int ox = 0; ox < w2; ++ox)
        for (int ci = 0; ci < c; ++ci) {
          const float g = 0.25f * gy[(oy * w2 + ox) * c + ci];
          gx[((2 * oy) * w + 2 * ox) * c + ci] += g;
          gx[((2 * oy) * w + 2 * ox + 1) * c + ci] += g;
          gx[((2 * oy + 1) * w + 2 * ox) * c + ci] += g;
          gx[((2 * oy + 1) * w + 2 * ox + 1) * c + ci] += g;
        }
  }

  static Vec apply_layer(const Layer& layer, const Vec& cur) {
    Vec next;
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, ConvLayer>) {
            detail::conv_forward(l.in, l.out_channels, l.W, l.b, l.relu, cur,
                                 next);
          } else if constexpr (std::is_same_v<T, AvgPoolLayer>) {
            pool_forward(l, cur, next);
          } else if constexpr (std::is_same_v<T, ResidualLayer>) {
            Vec mid;
            detail::conv_forward(l.in, l.in.channels, l.W1, l.b1, true, cur,
                                 mid);
            detail::conv_forward(l.in, l.in.channels, l.W2, l.b2, false, mid,
                                 next);
            next += cur;
            next = next.cwiseMax(0.0f);
          } else {
            next.noalias() = l.W * cur;
            next += l.b.col(0);
            if (l.relu) next = next.cwiseMax(0.0f);
          }
        },
        layer);
    return next;
  }
};

// He-normal initialization of every parameter matrix, biases zeroed.
inline void init_weights(Network& net, std::uint64_t seed) {
  auto rng = make_rng(seed, /*stream=*/0x11);
  std::normal_distribution<float> unit(0.0f, 1.0f);
  for (auto& layer : net.layers) {
    std::visit(
        [&](auto& l) {
          using T = std::decay_t<decltype(l)>;
          auto fill = [&](Mat& W, int fan_in) {
            const float s = std::sqrt(2.0f / static_cast<float>(fan_in));
            for (Eigen::Index j = 0; j < W.size(); ++j)
              W.data()[j] = s * unit(rng);
          };
          if constexpr (std::is_same_v<T, ConvLayer>) {
            fill(l.W, static_cast<int>(l.W.cols()));
            l.b.setZero();
          } else if constexpr (std::is_same_v<T, ResidualLayer>) {
            fill(l.W1, static_cast<int>(l.W1.cols()));
            l.b1.setZero();
            fill(l.W2, static_cast<int>(l.W2.cols()));
            l.b2.setZero();
          } else if constexpr (std::is_same_v<T, DenseLayer>) {
            fill(l.W, l.in);
            l.b.setZero();
          }
        },
        layer);
  }
}

}  // namespace mexkit::models
