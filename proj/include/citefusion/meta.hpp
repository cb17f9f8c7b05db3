#pragma once

// Direct level-1 aggregators mapping a z-vector to class logits: the
// feedforward meta-classifier (2K -> H -> K, rectifier hidden layer) plus
// multinomial logistic regression and k-nearest-neighbour heads.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "citefusion/fusion.hpp"
#include "citefusion/training.hpp"

namespace citefusion {

struct MetaPrediction {
  std::vector<double> logits;
  std::vector<double> probabilities;
  ClassIndex label = 0;
};

MetaPrediction make_prediction(std::vector<double> logits);

// Common interface for every head that consumes a full z-vector.
class MetaClassifier {
 public:
  virtual ~MetaClassifier() = default;
  virtual std::size_t input_width() const = 0;
  virtual std::size_t num_classes() const = 0;
  virtual MetaPrediction predict(std::span<const double> z) const = 0;
  virtual std::string name() const = 0;

  MetaPrediction predict(const ZVector& z) const { return predict(std::span<const double>(z.values)); }
};

struct FfnnParams {
  std::size_t input = 0;
  std::size_t hidden = 0;
  std::size_t output = 0;
  std::vector<double> w1;  // hidden x input, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // output x hidden, row-major
  std::vector<double> b2;  // output
  std::uint64_t seed = 0;

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  // Throws InvalidArgument for a zero width.
  static FfnnParams initialize(std::size_t input, std::size_t hidden, std::size_t output,
                               std::uint64_t seed);
  static FfnnParams zeros(std::size_t input, std::size_t hidden, std::size_t output);

  std::size_t parameter_count() const;
  // Flat view over w1, b1, w2, b2 in that order.
  double& parameter(std::size_t index);
  double parameter(std::size_t index) const;
  bool is_bias(std::size_t index) const;

  void validate() const;
  bool operator==(const FfnnParams&) const = default;
};

std::vector<double> ffnn_logits(const FfnnParams& params, std::span<const double> z);
MetaPrediction ffnn_predict(const FfnnParams& params, const ZVector& z);

// Same layout as FfnnParams::parameter().
struct FfnnGradients {
  std::vector<double> values;
  double loss = 0.0;  // mean cross-entropy over the batch
};

// Gradient of the mean softmax cross-entropy over `batch` (indices into
// inputs/labels). Throws InvalidArgument on an empty batch.
FfnnGradients ffnn_gradients(const FfnnParams& params, std::span<const ZVector> inputs,
                             std::span<const ClassIndex> labels,
                             std::span<const std::size_t> batch);
double ffnn_loss(const FfnnParams& params, std::span<const ZVector> inputs,
                 std::span<const ClassIndex> labels);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct MetaTrainConfig {
  TrainConfig loop{.learning_rate = 0.01,
                   .weight_decay = 0.01,
                   .batch_size = 32,
                   .eval_every = 10,
                   .patience = 50,
                   .plateau = {},
                   .max_epochs = 200,
                   .seed = 0};
  std::size_t hidden_width = 32;
  AdamWConfig adam;
};

struct TrainedFfnn {
  FfnnParams params;  // best-validation-loss state
  TrainLog log;
  std::vector<std::string> warnings;
};

// AdamW on the cross-entropy, weight decay skipped for biases. `val` drives
// checkpointing and early stopping.
TrainedFfnn train_ffnn(const ZSet& train, const ZSet& val, std::size_t num_classes,
                       const MetaTrainConfig& config);

class FfnnClassifier final : public MetaClassifier {
 public:
  explicit FfnnClassifier(FfnnParams params);
  std::size_t input_width() const override { return params_.input; }
  std::size_t num_classes() const override { return params_.output; }
  MetaPrediction predict(std::span<const double> z) const override;
  using MetaClassifier::predict;
  std::string name() const override { return "ffnn"; }
  const FfnnParams& params() const { return params_; }

 private:
  FfnnParams params_;
};

// Multinomial logistic regression over the 2K inputs.
class LogisticHead final : public MetaClassifier {
 public:
  LogisticHead(std::size_t input, std::size_t classes);
  std::size_t input_width() const override { return input_; }
  std::size_t num_classes() const override { return classes_; }
  MetaPrediction predict(std::span<const double> z) const override;
  using MetaClassifier::predict;
  std::string name() const override { return "lr"; }

  std::vector<double>& weights() { return weights_; }  // classes x input
  std::vector<double>& biases() { return biases_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& biases() const { return biases_; }

 private:
  std::size_t input_;
  std::size_t classes_;
  std::vector<double> weights_;
  std::vector<double> biases_;
};

struct LogisticHeadConfig {
  double learning_rate = 0.5;
  int epochs = 500;  // full-batch gradient descent
  double l2 = 0.0;
};

LogisticHead train_lr_head(const ZSet& train, std::size_t num_classes,
                           const LogisticHeadConfig& config = {});

// Euclidean k-NN. Equal distances keep the lower training index; equal vote
// counts go to the lowest class index. Probabilities are vote fractions and
// logits their logs (-inf for zero votes is clamped to a large negative).
class KnnHead final : public MetaClassifier {
 public:
  KnnHead(ZSet train, std::size_t num_classes, std::size_t k);
  std::size_t input_width() const override { return width_; }
  std::size_t num_classes() const override { return classes_; }
  MetaPrediction predict(std::span<const double> z) const override;
  using MetaClassifier::predict;
  std::string name() const override { return "knn"; }

 private:
  ZSet train_;
  std::size_t classes_;
  std::size_t k_;
  std::size_t width_;
};

// Throws InvalidArgument when k is zero or larger than the training set.
KnnHead train_knn_head(const ZSet& train, std::size_t num_classes, std::size_t k);

}  // namespace citefusion
