#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "mexkit/common.hpp"

namespace mexkit::core {

enum class DatasetRole {
  kTargetTrain,
  kAttackerPool,
  kAttackerValidation,
  kTest,
};

inline const char* to_string(DatasetRole r) {
  switch (r) {
    case DatasetRole::kTargetTrain: return "target-train";
    case DatasetRole::kAttackerPool: return "attacker-pool";
    case DatasetRole::kAttackerValidation: return "attacker-validation";
    case DatasetRole::kTest: return "test";
  }
  return "?";
}

struct ImageShape {
  int height = 0;
  int width = 0;
  int channels = 0;

  int size() const { return height * width * channels; }
  bool operator==(const ImageShape&) const = default;
};

// Images with class labels, tagged by role. Pixels are HWC-flattened reals
// in [0,1], one column per item; item order is stable, so selection indices
// stay valid across reads.
class LabeledDataset {
 public:
  LabeledDataset() = default;

  LabeledDataset(std::string name, ImageShape shape, Eigen::MatrixXf images,
                 std::vector<int> labels, DatasetRole role, int class_count)
      : name_(std::move(name)),
        shape_(shape),
        images_(std::move(images)),
        labels_(std::move(labels)),
        role_(role),
        class_count_(class_count) {
    require(class_count_ > 0, "dataset: class_count must be positive");
    require(images_.rows() == shape_.size(),
            "dataset: image rows do not match shape");
    require(images_.cols() == static_cast<Eigen::Index>(labels_.size()),
            "dataset: image/label count mismatch");
    for (int y : labels_)
      require(y >= 0 && y < class_count_, "dataset: label out of range");
  }

  const std::string& name() const { return name_; }
  const ImageShape& shape() const { return shape_; }
  DatasetRole role() const { return role_; }
  int class_count() const { return class_count_; }
  int size() const { return static_cast<int>(images_.cols()); }
  bool empty() const { return size() == 0; }

  const Eigen::MatrixXf& images() const { return images_; }
  const std::vector<int>& labels() const { return labels_; }

  Eigen::MatrixXf::ConstColXpr image(int i) const {
    require(i >= 0 && i < size(), "dataset: item index out of range");
    return images_.col(i);
  }
  int label(int i) const {
    require(i >= 0 && i < size(), "dataset: item index out of range");
    return labels_[static_cast<std::size_t>(i)];
  }

  // A dataset holding the given items, in the given order.
  LabeledDataset subset(const std::vector<int>& indices,
                        std::string name) const {
    Eigen::MatrixXf imgs(images_.rows(),
                         static_cast<Eigen::Index>(indices.size()));
    std::vector<int> labs(indices.size());
    for (std::size_t j = 0; j < indices.size(); ++j) {
      require(indices[j] >= 0 && indices[j] < size(),
              "dataset: subset index out of range");
      imgs.col(static_cast<Eigen::Index>(j)) = images_.col(indices[j]);
      labs[j] = labels_[static_cast<std::size_t>(indices[j])];
    }
    return LabeledDataset(std::move(name), shape_, std::move(imgs),
                          std::move(labs), role_, class_count_);
  }

 private:
  std::string name_;
  ImageShape shape_{};
  Eigen::MatrixXf images_;
  std::vector<int> labels_;
  DatasetRole role_ = DatasetRole::kTest;
  int class_count_ = 1;
};

// Top-1 labels from one model, position-aligned to a dataset.
struct PredictionVector {
  std::string source;
  std::vector<int> labels;

  int size() const { return static_cast<int>(labels.size()); }
};

}  // namespace mexkit::core
