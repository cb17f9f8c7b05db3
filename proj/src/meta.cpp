#include "citefusion/meta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "citefusion/errors.hpp"
#include "citefusion/weighting.hpp"

namespace citefusion {

MetaPrediction make_prediction(std::vector<double> logits) {
  MetaPrediction p;
  p.probabilities = softmax(logits);
  p.label = argmax_first(logits);
  p.logits = std::move(logits);
  return p;
}

namespace {

// Uniform double in [0,1) from the top 53 bits; independent of <random>'s
// distribution implementations.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void check_width(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw InvalidArgument("z-vector width " + std::to_string(got) + " does not match head input " +
                          std::to_string(expected));
  }
}

}  // namespace

FfnnParams FfnnParams::zeros(std::size_t input, std::size_t hidden, std::size_t output) {
  if (input == 0 || hidden == 0 || output == 0) {
    throw InvalidArgument("FFNN widths must be positive (hidden width 0 is not a network)");
  }
  FfnnParams p;
  p.input = input;
  p.hidden = hidden;
  p.output = output;
  p.w1.assign(hidden * input, 0.0);
  p.b1.assign(hidden, 0.0);
  p.w2.assign(output * hidden, 0.0);
  p.b2.assign(output, 0.0);
  return p;
}

FfnnParams FfnnParams::initialize(std::size_t input, std::size_t hidden, std::size_t output,
                                  std::uint64_t seed) {
  FfnnParams p = zeros(input, hidden, output);
  p.seed = seed;
  std::mt19937_64 rng(seed);
  const double a1 = 1.0 / std::sqrt(static_cast<double>(input));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (double& w : p.w1) w = (2.0 * unit_uniform(rng) - 1.0) * a1;
  for (double& w : p.w2) w = (2.0 * unit_uniform(rng) - 1.0) * a2;
  return p;
}

std::size_t FfnnParams::parameter_count() const {
  return w1.size() + b1.size() + w2.size() + b2.size();
}

double& FfnnParams::parameter(std::size_t index) {
  if (index < w1.size()) return w1[index];
  index -= w1.size();
  if (index < b1.size()) return b1[index];
  index -= b1.size();
  if (index < w2.size()) return w2[index];
  index -= w2.size();
  if (index < b2.size()) return b2[index];
  throw InvalidArgument("FFNN parameter index out of range");
}

double FfnnParams::parameter(std::size_t index) const {
  return const_cast<FfnnParams&>(*this).parameter(index);
}

bool FfnnParams::is_bias(std::size_t index) const {
  if (index < w1.size()) return false;
  index -= w1.size();
  if (index < b1.size()) return true;
  index -= b1.size();
  if (index < w2.size()) return false;
  return true;
}

void FfnnParams::validate() const {
  if (input == 0 || hidden == 0 || output == 0) throw InvalidArgument("FFNN widths must be positive");
  if (w1.size() != hidden * input || b1.size() != hidden || w2.size() != output * hidden ||
      b2.size() != output) {
    throw InvalidArgument("FFNN parameter shapes are inconsistent");
  }
}

std::vector<double> ffnn_logits(const FfnnParams& p, std::span<const double> z) {
  check_width(p.input, z.size());
  std::vector<double> h(p.hidden);
  for (std::size_t r = 0; r < p.hidden; ++r) {
    double a = p.b1[r];
    for (std::size_t c = 0; c < p.input; ++c) a += p.w1[r * p.input + c] * z[c];
    h[r] = a > 0.0 ? a : 0.0;
  }
  std::vector<double> out(p.output);
  for (std::size_t r = 0; r < p.output; ++r) {
    double a = p.b2[r];
    for (std::size_t c = 0; c < p.hidden; ++c) a += p.w2[r * p.hidden + c] * h[c];
    out[r] = a;
  }
  return out;
}

MetaPrediction ffnn_predict(const FfnnParams& params, const ZVector& z) {
  return make_prediction(ffnn_logits(params, z.values));
}

FfnnGradients ffnn_gradients(const FfnnParams& p, std::span<const ZVector> inputs,
                             std::span<const ClassIndex> labels,
                             std::span<const std::size_t> batch) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  if (inputs.size() != labels.size()) throw InvalidArgument("inputs/labels size mismatch");

  FfnnGradients g;
  g.values.assign(p.parameter_count(), 0.0);
  double* gw1 = g.values.data();
  double* gb1 = gw1 + p.w1.size();
  double* gw2 = gb1 + p.b1.size();
  double* gb2 = gw2 + p.w2.size();
  const double inv = 1.0 / static_cast<double>(batch.size());

  std::vector<double> pre(p.hidden), h(p.hidden), delta_out(p.output), delta_h(p.hidden);
  for (std::size_t idx : batch) {
    const auto& z = inputs[idx].values;
    check_width(p.input, z.size());
    if (labels[idx] >= p.output) throw InvalidArgument("label outside FFNN output width");

    for (std::size_t r = 0; r < p.hidden; ++r) {
      double a = p.b1[r];
      for (std::size_t c = 0; c < p.input; ++c) a += p.w1[r * p.input + c] * z[c];
      pre[r] = a;
      h[r] = a > 0.0 ? a : 0.0;
    }
    std::vector<double> logits(p.output);
    for (std::size_t r = 0; r < p.output; ++r) {
      double a = p.b2[r];
      for (std::size_t c = 0; c < p.hidden; ++c) a += p.w2[r * p.hidden + c] * h[c];
      logits[r] = a;
    }
    const auto prob = softmax(logits);
    g.loss -= std::log(std::max(prob[labels[idx]], std::numeric_limits<double>::min())) * inv;

    for (std::size_t r = 0; r < p.output; ++r) {
      delta_out[r] = (prob[r] - (r == labels[idx] ? 1.0 : 0.0)) * inv;
      gb2[r] += delta_out[r];
      for (std::size_t c = 0; c < p.hidden; ++c) gw2[r * p.hidden + c] += delta_out[r] * h[c];
    }
    for (std::size_t c = 0; c < p.hidden; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < p.output; ++r) s += p.w2[r * p.hidden + c] * delta_out[r];
      delta_h[c] = pre[c] > 0.0 ? s : 0.0;
      gb1[c] += delta_h[c];
      for (std::size_t k = 0; k < p.input; ++k) gw1[c * p.input + k] += delta_h[c] * z[k];
    }
  }
  return g;
}

double ffnn_loss(const FfnnParams& p, std::span<const ZVector> inputs,
                 std::span<const ClassIndex> labels) {
  if (inputs.empty()) throw InvalidArgument("loss over an empty set");
  if (inputs.size() != labels.size()) throw InvalidArgument("inputs/labels size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto prob = softmax(ffnn_logits(p, inputs[i].values));
    total -= std::log(std::max(prob[labels[i]], std::numeric_limits<double>::min()));
  }
  return total / static_cast<double>(inputs.size());
}

TrainedFfnn train_ffnn(const ZSet& train, const ZSet& val, std::size_t num_classes,
                       const MetaTrainConfig& config) {
  if (train.rows.empty()) throw InvalidArgument("empty meta-training set");
  if (val.rows.empty()) throw InvalidArgument("empty meta-validation set");
  const std::size_t width = 2 * num_classes;
  for (const auto* set : {&train, &val}) {
    for (const auto& z : set->rows) {
      if (z.values.size() != width) {
        throw InvalidArgument("z-vector width " + std::to_string(z.values.size()) +
                              " does not match schema width " + std::to_string(width));
      }
    }
  }

  TrainedFfnn out;
  std::vector<bool> present(num_classes, false);
  for (auto y : train.labels) {
    if (y >= num_classes) throw InvalidArgument("meta-training label outside schema");
    present[y] = true;
  }
  for (std::size_t j = 0; j < num_classes; ++j) {
    if (!present[j]) out.warnings.push_back("class " + std::to_string(j) + " absent from meta-training set");
  }

  FfnnParams current = FfnnParams::initialize(width, config.hidden_width, num_classes,
                                              config.loop.seed);
  FfnnParams best = current;
  std::vector<double> m(current.parameter_count(), 0.0), v(current.parameter_count(), 0.0);
  long step_count = 0;

  TrainingHooks hooks;
  hooks.step = [&](std::span<const std::size_t> batch, double lr) {
    const FfnnGradients g = ffnn_gradients(current, train.rows, train.labels, batch);
    ++step_count;
    const double c1 = 1.0 - std::pow(config.adam.beta1, static_cast<double>(step_count));
    const double c2 = 1.0 - std::pow(config.adam.beta2, static_cast<double>(step_count));
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      double& theta = current.parameter(i);
      if (!current.is_bias(i)) theta -= lr * config.loop.weight_decay * theta;
      m[i] = config.adam.beta1 * m[i] + (1.0 - config.adam.beta1) * g.values[i];
      v[i] = config.adam.beta2 * v[i] + (1.0 - config.adam.beta2) * g.values[i] * g.values[i];
      theta -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config.adam.epsilon);
    }
  };
  hooks.validation_loss = [&] { return ffnn_loss(current, val.rows, val.labels); };
  hooks.save_best = [&] { best = current; };

  out.log = run_training(train.rows.size(), config.loop, hooks);
  out.params = std::move(best);
  return out;
}

FfnnClassifier::FfnnClassifier(FfnnParams params) : params_(std::move(params)) {
  params_.validate();
}

MetaPrediction FfnnClassifier::predict(std::span<const double> z) const {
  return make_prediction(ffnn_logits(params_, z));
}

LogisticHead::LogisticHead(std::size_t input, std::size_t classes)
    : input_(input), classes_(classes), weights_(input * classes, 0.0), biases_(classes, 0.0) {
  if (input == 0 || classes == 0) throw InvalidArgument("logistic head widths must be positive");
}

MetaPrediction LogisticHead::predict(std::span<const double> z) const {
  check_width(input_, z.size());
  std::vector<double> logits(classes_);
  for (std::size_t r = 0; r < classes_; ++r) {
    double a = biases_[r];
    for (std::size_t c = 0; c < input_; ++c) a += weights_[r * input_ + c] * z[c];
    logits[r] = a;
  }
  return make_prediction(std::move(logits));
}

LogisticHead train_lr_head(const ZSet& train, std::size_t num_classes,
                           const LogisticHeadConfig& config) {
  if (train.rows.empty()) throw InvalidArgument("empty training set for LR head");
  const std::size_t width = train.rows.front().values.size();
  LogisticHead head(width, num_classes);
  const double inv = 1.0 / static_cast<double>(train.rows.size());
  std::vector<double> gw(width * num_classes), gb(num_classes);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i = 0; i < train.rows.size(); ++i) {
      const auto& z = train.rows[i].values;
      check_width(width, z.size());
      const auto prob = head.predict(z).probabilities;
      for (std::size_t r = 0; r < num_classes; ++r) {
        const double d = (prob[r] - (train.labels[i] == r ? 1.0 : 0.0)) * inv;
        gb[r] += d;
        for (std::size_t c = 0; c < width; ++c) gw[r * width + c] += d * z[c];
      }
    }
    for (std::size_t q = 0; q < gw.size(); ++q) {
      head.weights()[q] -= config.learning_rate * (gw[q] + config.l2 * head.weights()[q]);
    }
    for (std::size_t r = 0; r < num_classes; ++r) head.biases()[r] -= config.learning_rate * gb[r];
  }
  return head;
}

KnnHead::KnnHead(ZSet train, std::size_t num_classes, std::size_t k)
    : train_(std::move(train)), classes_(num_classes), k_(k) {
  if (k_ == 0) throw InvalidArgument("k must be at least 1");
  if (k_ > train_.rows.size()) throw InvalidArgument("k larger than the training set");
  width_ = train_.rows.front().values.size();
}

MetaPrediction KnnHead::predict(std::span<const double> z) const {
  check_width(width_, z.size());
  std::vector<std::pair<double, std::size_t>> dist(train_.rows.size());
  for (std::size_t i = 0; i < train_.rows.size(); ++i) {
    double d = 0.0;
    for (std::size_t c = 0; c < width_; ++c) {
      const double diff = train_.rows[i].values[c] - z[c];
      d += diff * diff;
    }
    dist[i] = {d, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
  std::vector<double> votes(classes_, 0.0);
  for (std::size_t n = 0; n < k_; ++n) votes[train_.labels[dist[n].second]] += 1.0;

  MetaPrediction p;
  p.probabilities.resize(classes_);
  p.logits.resize(classes_);
  for (std::size_t j = 0; j < classes_; ++j) {
    p.probabilities[j] = votes[j] / static_cast<double>(k_);
    p.logits[j] = votes[j] > 0 ? std::log(p.probabilities[j]) : -1e300;
  }
  p.label = argmax_first(votes);
  return p;
}

KnnHead train_knn_head(const ZSet& train, std::size_t num_classes, std::size_t k) {
  if (train.rows.empty()) throw InvalidArgument("empty training set for KNN head");
  return KnnHead(train, num_classes, k);
}

}  // namespace citefusion
