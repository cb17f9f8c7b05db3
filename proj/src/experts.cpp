#include "citefusion/experts.hpp"

#include <cmath>

#include "citefusion/errors.hpp"

namespace citefusion {

double logistic(double logit) {
  if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

BinaryProbabilities two_logit_softmax(double positive_logit) {
  BinaryProbabilities p;
  p.positive = logistic(positive_logit);
  p.negative = 1.0 - p.positive;
  return p;
}

BinaryExpert::BinaryExpert(ClassIndex target_class, Featurizer featurizer)
    : target_class_(target_class),
      featurizer_(std::move(featurizer)),
      weights_(featurizer_.dimension(), 0.0) {}

void BinaryExpert::set_parameters(std::vector<double> weights, double bias) {
  if (weights.size() != featurizer_.dimension()) {
    throw InvalidArgument("weight vector size does not match featurizer dimension");
  }
  weights_ = std::move(weights);
  bias_ = bias;
}

double BinaryExpert::logit(const SparseVector& features) const {
  return features.dot(weights_) + bias_;
}

double BinaryExpert::logit(std::string_view text) const {
  return logit(featurizer_.featurize(text));
}

BinaryProbabilities predict(const BinaryExpert& expert, std::string_view text) {
  if (!expert.trained()) {
    throw StateError("expert for class " + std::to_string(expert.target_class()) + " (" +
                     std::string(to_string(expert.variant())) + ") is not trained");
  }
  return two_logit_softmax(expert.logit(text));
}

BinaryProbabilities predict(const BinaryExpert& expert, const FormattedInput& input) {
  return predict(expert, std::string_view(input.text));
}

std::vector<TokenAttribution> token_attributions(const BinaryExpert& expert,
                                                 std::string_view text) {
  const Featurizer& f = expert.featurizer();
  const auto& w = expert.weights();
  const auto tokens = tokenize(text, f.variant());
  std::vector<TokenAttribution> out(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out[i].token = tokens[i];
    const auto u = f.unigram_index(tokens[i]);
    out[i].contribution += w[u] * f.feature_weight(u);
  }
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    const auto b = f.bigram_index(tokens[i], tokens[i + 1]);
    const double half = 0.5 * w[b] * f.feature_weight(b);
    out[i].contribution += half;
    out[i + 1].contribution += half;
  }
  return out;
}

double binary_cross_entropy(const BinaryExpert& expert, std::span<const SparseVector> features,
                            std::span<const int> labels) {
  if (features.size() != labels.size()) throw InvalidArgument("features/labels size mismatch");
  if (features.empty()) throw InvalidArgument("cross-entropy over an empty set");
  double total = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double z = expert.logit(features[i]);
    // -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
    const double s = labels[i] == 1 ? -z : z;
    total += s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
  }
  return total / static_cast<double>(features.size());
}

void gradient_step(BinaryExpert& expert, std::span<const SparseVector> features,
                   std::span<const int> labels, std::span<const std::size_t> batch,
                   double learning_rate, double weight_decay) {
  if (batch.empty()) return;
  std::vector<double> w = expert.weights();
  double b = expert.bias();
  const double inv = 1.0 / static_cast<double>(batch.size());

  // Gradients are taken at the pre-step parameters.
  std::vector<std::pair<std::uint32_t, double>> grad;
  double grad_b = 0.0;
  for (std::size_t idx : batch) {
    const double residual = logistic(expert.logit(features[idx])) - labels[idx];
    grad_b += residual * inv;
    for (const auto& [f, v] : features[idx].entries) grad.emplace_back(f, residual * v * inv);
  }
  if (weight_decay != 0.0) {
    const double shrink = 1.0 - learning_rate * weight_decay;
    for (double& x : w) x *= shrink;
  }
  for (const auto& [f, g] : grad) w[f] -= learning_rate * g;
  b -= learning_rate * grad_b;
  expert.set_parameters(std::move(w), b);
}

TrainedExpert train_expert(const BinaryDataset& train, const BinaryDataset& val,
                           Variant variant, const TrainConfig& config, std::size_t dimension) {
  config.validate();
  if (train.items.empty()) throw InvalidArgument("empty training split");
  const std::size_t pos = train.positives();
  if (pos == 0 || pos == train.items.size()) {
    throw InvalidArgument("training split for class " + std::to_string(train.target_class) +
                          " contains a single class");
  }
  if (val.items.empty()) throw InvalidArgument("empty validation split");

  std::vector<std::string> texts;
  texts.reserve(train.items.size());
  for (const auto& item : train.items) texts.push_back(item.input.text);
  Featurizer featurizer(variant, dimension);
  featurizer.fit(texts);

  auto featurize_all = [&](const BinaryDataset& d, std::vector<SparseVector>& x,
                           std::vector<int>& y) {
    x.reserve(d.items.size());
    y.reserve(d.items.size());
    for (const auto& item : d.items) {
      x.push_back(featurizer.featurize(item.input.text));
      y.push_back(item.label);
    }
  };
  std::vector<SparseVector> train_x, val_x;
  std::vector<int> train_y, val_y;
  featurize_all(train, train_x, train_y);
  featurize_all(val, val_x, val_y);

  BinaryExpert current(train.target_class, featurizer);
  current.mark_trained();
  BinaryExpert best = current;

  TrainingHooks hooks;
  hooks.step = [&](std::span<const std::size_t> batch, double lr) {
    gradient_step(current, train_x, train_y, batch, lr, config.weight_decay);
  };
  hooks.validation_loss = [&] { return binary_cross_entropy(current, val_x, val_y); };
  hooks.save_best = [&] { best = current; };

  TrainedExpert out;
  out.log = run_training(train_x.size(), config, hooks);
  out.expert = std::move(best);
  return out;
}

}  // namespace citefusion
