#pragma once

// Level-0 binary experts. Each expert is a two-logit softmax classifier for
// one OVA task; the reference implementation is a logistic head over a
// hashed featurizer (positive logit w.x + b, negative logit 0).

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "citefusion/corpus.hpp"
#include "citefusion/features.hpp"
#include "citefusion/training.hpp"

namespace citefusion {

struct BinaryProbabilities {
  double negative = 0.5;  // rho0
  double positive = 0.5;  // rho1
};

// Numerically stable logistic / two-logit softmax.
double logistic(double logit);
BinaryProbabilities two_logit_softmax(double positive_logit);

struct ExpertMetadata {
  std::string dataset;
  Setting setting = Setting::WS;
  std::uint64_t seed = 0;

  bool operator==(const ExpertMetadata&) const = default;
};

class BinaryExpert {
 public:
  BinaryExpert() = default;
  BinaryExpert(ClassIndex target_class, Featurizer featurizer);

  ClassIndex target_class() const { return target_class_; }
  Variant variant() const { return featurizer_.variant(); }
  const Featurizer& featurizer() const { return featurizer_; }
  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  bool trained() const { return trained_; }
  const ExpertMetadata& metadata() const { return metadata_; }

  void set_parameters(std::vector<double> weights, double bias);
  void set_metadata(ExpertMetadata metadata) { metadata_ = std::move(metadata); }
  void mark_trained() { trained_ = true; }

  double logit(const SparseVector& features) const;
  double logit(std::string_view text) const;

  bool operator==(const BinaryExpert&) const = default;

 private:
  ClassIndex target_class_ = 0;
  Featurizer featurizer_;
  std::vector<double> weights_;
  double bias_ = 0.0;
  bool trained_ = false;
  ExpertMetadata metadata_;
};

// Throws StateError for an untrained expert.
BinaryProbabilities predict(const BinaryExpert& expert, const FormattedInput& input);
BinaryProbabilities predict(const BinaryExpert& expert, std::string_view text);

struct TokenAttribution {
  std::string token;
  double contribution = 0.0;
};

// One entry per token occurrence, in text order. Each token receives its
// unigram term w*v plus half of every bigram it belongs to, so the
// contributions sum to w.x exactly; adding the bias gives the positive logit.
std::vector<TokenAttribution> token_attributions(const BinaryExpert& expert,
                                                 std::string_view text);

// Mean binary cross-entropy of `expert` over pre-featurized examples.
double binary_cross_entropy(const BinaryExpert& expert, std::span<const SparseVector> features,
                            std::span<const int> labels);

// One decoupled-weight-decay gradient step on a batch:
//   w <- w - lr * grad_w - lr * weight_decay * w,   b <- b - lr * grad_b
// where grad is the gradient of the mean batch cross-entropy.
void gradient_step(BinaryExpert& expert, std::span<const SparseVector> features,
                   std::span<const int> labels, std::span<const std::size_t> batch,
                   double learning_rate, double weight_decay);

struct TrainedExpert {
  BinaryExpert expert;  // best-validation-loss state
  TrainLog log;
};

// Featurizer is fitted on the training texts. Throws InvalidArgument when the
// training split holds a single class or the validation split is empty.
TrainedExpert train_expert(const BinaryDataset& train, const BinaryDataset& val,
                           Variant variant, const TrainConfig& config,
                           std::size_t dimension = kDefaultFeatureDimension);

}  // namespace citefusion
