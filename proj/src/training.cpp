#include "citefusion/training.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "citefusion/errors.hpp"

namespace citefusion {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw InvalidArgument("learning_rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be >= 0");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (eval_every < 1) throw InvalidArgument("eval_every must be >= 1");
  if (patience < 1) throw InvalidArgument("patience must be >= 1");
  if (max_epochs < 1) throw InvalidArgument("max_epochs must be >= 1");
  if (!(plateau.factor > 0.0 && plateau.factor <= 1.0)) {
    throw InvalidArgument("plateau factor must be in (0, 1]");
  }
  if (plateau.patience < 1) throw InvalidArgument("plateau patience must be >= 1");
}

double TrainLog::best_validation_loss() const {
  return checkpoints.empty() ? std::numeric_limits<double>::infinity()
                             : checkpoints.back().best_validation_loss;
}

void deterministic_shuffle(std::vector<std::size_t>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    // Rejection sampling for an unbiased draw in [0, i).
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
      r = rng();
    } while (r >= limit);
    std::swap(items[i - 1], items[r % bound]);
  }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

TrainLog run_training(std::size_t train_size, const TrainConfig& config,
                      const TrainingHooks& hooks) {
  config.validate();
  if (train_size == 0) throw InvalidArgument("empty training set");

  TrainLog log;
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_size);
  std::iota(order.begin(), order.end(), std::size_t{0});

  double lr = config.learning_rate;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  double plateau_best = std::numeric_limits<double>::infinity();
  int since_plateau_best = 0;
  std::size_t batches = 0;

  auto evaluate = [&](int epoch) {
    const double loss = hooks.validation_loss();
    EvaluationRecord rec;
    rec.step = log.evaluations.size();
    rec.batches_seen = batches;
    rec.epoch = epoch;
    rec.validation_loss = loss;
    rec.learning_rate = lr;
    log.evaluations.push_back(rec);

    if (loss < best) {
      best = loss;
      since_best = 0;
      hooks.save_best();
      log.checkpoints.push_back({loss, rec.step});
    } else {
      ++since_best;
    }

    if (loss < plateau_best) {
      plateau_best = loss;
      since_plateau_best = 0;
    } else if (++since_plateau_best >= config.plateau.patience) {
      if (lr > config.plateau.min_learning_rate) {
        lr = std::max(lr * config.plateau.factor, config.plateau.min_learning_rate);
      }
      since_plateau_best = 0;
    }
    return since_best >= config.patience;
  };

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    deterministic_shuffle(order, rng);
    log.epochs_run = epoch + 1;
    for (std::size_t start = 0; start < train_size; start += config.batch_size) {
      const std::size_t end = std::min(train_size, start + config.batch_size);
      hooks.step(std::span<const std::size_t>(order.data() + start, end - start), lr);
      ++batches;
      if (batches % config.eval_every == 0 && evaluate(epoch)) {
        log.early_stopped = true;
        return log;
      }
    }
  }
  // Short runs may never hit an evaluation boundary.
  if (log.evaluations.empty()) evaluate(config.max_epochs - 1);
  return log;
}

}  // namespace citefusion
