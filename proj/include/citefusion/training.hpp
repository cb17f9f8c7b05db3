#pragma once

// Shared training loop: fine-grained validation every few batches,
// best-validation-loss checkpointing, early stopping and a
// reduce-on-plateau learning-rate scheduler.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace citefusion {

struct PlateauScheduler {
  double factor = 0.5;       // lr multiplier on plateau
  int patience = 10;         // evaluations without improvement before a cut
  double min_learning_rate = 1e-6;
};

struct TrainConfig {
  double learning_rate = 0.1;
  double weight_decay = 0.01;  // decoupled; never applied to biases
  std::size_t batch_size = 32;
  std::size_t eval_every = 10;  // batches between validation passes
  int patience = 50;            // evaluations without improvement before stopping
  PlateauScheduler plateau;
  int max_epochs = 20;
  std::uint64_t seed = 0;

  // Throws InvalidArgument when a field is out of range.
  void validate() const;
};

struct Checkpoint {
  double best_validation_loss = 0.0;
  std::size_t evaluation_step = 0;  // 0-based index into TrainLog::evaluations
};

struct EvaluationRecord {
  std::size_t step = 0;
  std::size_t batches_seen = 0;
  int epoch = 0;
  double validation_loss = 0.0;
  double learning_rate = 0.0;
};

struct TrainLog {
  std::vector<EvaluationRecord> evaluations;
  std::vector<Checkpoint> checkpoints;  // one entry per saved best state
  int epochs_run = 0;
  bool early_stopped = false;

  double best_validation_loss() const;
};

// Hooks the loop drives. `step` applies one optimizer update on the given
// training indices, `validation_loss` scores the current state, and
// `save_best` snapshots the current state as the new best checkpoint.
struct TrainingHooks {
  std::function<void(std::span<const std::size_t> batch, double learning_rate)> step;
  std::function<double()> validation_loss;
  std::function<void()> save_best;
};

// Runs the loop; the caller restores its snapshot afterwards. Ties with the
// best loss count as non-improvement.
TrainLog run_training(std::size_t train_size, const TrainConfig& config,
                      const TrainingHooks& hooks);

// Fisher-Yates with an explicit bounded draw so results do not depend on
// the standard library's distribution implementations.
void deterministic_shuffle(std::vector<std::size_t>& items, std::mt19937_64& rng);

// SplitMix64 finalizer; used to derive independent per-job seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace citefusion
