#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "mexkit/core/dataset.hpp"
#include "mexkit/core/metrics.hpp"
#include "mexkit/models/architectures.hpp"
#include "mexkit/models/network.hpp"
#include "mexkit/models/recipe.hpp"

namespace mexkit::models {

// A trainable image classifier. Prediction and embedding are const and
// deterministic for fixed weights; training takes exclusive ownership.
class Classifier {
 public:
  Classifier() = default;
  Classifier(ArchitectureSpec arch, TrainingRecipe recipe, Network net,
             bool trained)
      : arch_(std::move(arch)),
        recipe_(std::move(recipe)),
        net_(std::move(net)),
        trained_(trained) {}

  const ArchitectureSpec& arch() const { return arch_; }
  const TrainingRecipe& recipe() const { return recipe_; }
  const Network& net() const { return net_; }
  Network& mutable_net() { return net_; }
  bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

  int class_count() const { return net_.num_classes; }
  int num_classes() const { return net_.num_classes; }  // model concept alias
  int input_dim() const { return net_.input_dim; }
  int embed_dim() const { return net_.embed_dim; }

  std::string identifier() const {
    return arch_.name + "/" + recipe_.digest();
  }

  int predict_one(const Eigen::Ref<const Vec>& x) const {
    return net_.argmax_label(x);
  }

  Vec logits(const Eigen::Ref<const Vec>& x) const { return net_.forward(x); }

  Vec input_gradient(const Eigen::Ref<const Vec>& x, int cls) const {
    return net_.input_gradient(x, cls);
  }

  core::PredictionVector predict_labels(const Eigen::MatrixXf& inputs) const {
    require(inputs.rows() == net_.input_dim,
            "predict_labels: input shape mismatch");
    core::PredictionVector out;
    out.source = identifier();
    out.labels.resize(static_cast<std::size_t>(inputs.cols()));
    for (Eigen::Index i = 0; i < inputs.cols(); ++i)
      out.labels[static_cast<std::size_t>(i)] = net_.argmax_label(inputs.col(i));
    return out;
  }

  core::PredictionVector predict_labels(const core::LabeledDataset& ds) const {
    return predict_labels(ds.images());
  }

  Vec embed_one(const Eigen::Ref<const Vec>& x) const { return net_.embed(x); }

  Eigen::MatrixXf embed(const Eigen::MatrixXf& inputs) const {
    require(inputs.rows() == net_.input_dim, "embed: input shape mismatch");
    Eigen::MatrixXf out(net_.embed_dim, inputs.cols());
    for (Eigen::Index i = 0; i < inputs.cols(); ++i)
      out.col(i) = net_.embed(inputs.col(i));
    return out;
  }

 private:
  ArchitectureSpec arch_;
  TrainingRecipe recipe_;
  Network net_;
  bool trained_ = false;
};

struct TrainResult {
  Classifier classifier;
  double val_accuracy = 0.0;
  int epochs_run = 0;
};

namespace detail {

class OptimizerState {
 public:
  OptimizerState(const Network& net, Optimizer kind) : kind_(kind) {
    if (kind_ == Optimizer::kAdam) {
      m_ = net;
      m_.set_zero();
      v_ = net;
      v_.set_zero();
    } else {
      m_ = net;
      m_.set_zero();
    }
  }

  void step(Network& net, Network& grads, double lr, int batch_n) {
    const float scale = 1.0f / static_cast<float>(batch_n);
    auto params = net.param_list();
    auto gparams = grads.param_list();
    auto mparams = m_.param_list();
    if (kind_ == Optimizer::kSgdMomentum) {
      const float mu = 0.9f;
      for (std::size_t i = 0; i < params.size(); ++i) {
        *mparams[i] = mu * *mparams[i] - static_cast<float>(lr) * scale *
                                             *gparams[i];
        *params[i] += *mparams[i];
      }
    } else {
      auto vparams = v_.param_list();
      ++t_;
      const float b1 = 0.9f, b2 = 0.999f, eps = 1e-8f;
      const float corr1 = 1.0f - std::pow(b1, static_cast<float>(t_));
      const float corr2 = 1.0f - std::pow(b2, static_cast<float>(t_));
      for (std::size_t i = 0; i < params.size(); ++i) {
        Mat g = scale * *gparams[i];
        *mparams[i] = b1 * *mparams[i] + (1.0f - b1) * g;
        *vparams[i] = b2 * *vparams[i] + (1.0f - b2) * g.cwiseProduct(g);
        Mat mhat = *mparams[i] / corr1;
        Mat vhat = *vparams[i] / corr2;
        params[i]->array() -= static_cast<float>(lr) * mhat.array() /
                              (vhat.array().sqrt() + eps);
      }
    }
  }

 private:
  Optimizer kind_;
  Network m_;
  Network v_;
  int t_ = 0;
};

inline Vec softmax(const Vec& z) {
  Vec s = z.array() - z.maxCoeff();
  s = s.array().exp();
  return s / s.sum();
}

}  // namespace detail

inline double validation_accuracy(const Classifier& model,
                                  const core::LabeledDataset& val) {
  return core::accuracy(model.predict_labels(val), val);
}

// Minibatch cross-entropy training with per-epoch validation scoring and
// optional early stopping (best weights restored). Deterministic in
// recipe.rng_seed.
inline TrainResult train(Classifier model, const core::LabeledDataset& data,
                         const core::LabeledDataset& val,
                         const TrainingRecipe& recipe) {
  recipe.validate();
  require(!data.empty(), "train: empty training set");
  require(!val.empty(), "train: empty validation set");
  require(data.shape().size() == model.input_dim(),
          "train: data shape mismatch");
  require(data.class_count() <= model.class_count(),
          "train: label range exceeds model classes");

  Network& net = model.mutable_net();
  Network grads = net;
  grads.set_zero();
  detail::OptimizerState opt(net, recipe.optimizer);
  auto rng = make_rng(recipe.rng_seed, /*stream=*/0x7121);

  const int n = data.size();
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  double best_val = validation_accuracy(model, val);
  std::vector<float> best_params = net.flatten_params();
  int since_best = 0;
  int epochs_run = 0;

  Network::Trace trace;
  for (int epoch = 0; epoch < recipe.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = recipe.lr.at_epoch(epoch);
    for (int start = 0; start < n; start += recipe.batch_size) {
      const int stop = std::min(n, start + recipe.batch_size);
      grads.set_zero();
      for (int bi = start; bi < stop; ++bi) {
        const int idx = order[static_cast<std::size_t>(bi)];
        net.forward(data.image(idx), &trace);
        Vec dlogits = detail::softmax(trace.logits);
        dlogits[data.label(idx)] -= 1.0f;
        net.backward(trace, dlogits, &grads, nullptr);
      }
      opt.step(net, grads, lr, stop - start);
    }
    ++epochs_run;

    const double val_acc = validation_accuracy(model, val);
    if (val_acc > best_val) {
      best_val = val_acc;
      best_params = net.flatten_params();
      since_best = 0;
    } else if (recipe.patience > 0) {
      if (++since_best >= recipe.patience) break;
    }
  }

  if (recipe.patience > 0) {
    net.load_params(best_params);
  }
  if (recipe.epochs > 0) model.mark_trained();

  TrainResult res;
  res.val_accuracy = validation_accuracy(model, val);
  res.classifier = std::move(model);
  res.epochs_run = epochs_run;
  return res;
}

}  // namespace mexkit::models
