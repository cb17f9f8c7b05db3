#pragma once

// End-to-end ensemble: OVA decomposition -> 2K experts -> z-vectors ->
// meta-classifier, plus the serialized ensemble bundle and the multi-seed
// instability harness.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "citefusion/corpus.hpp"
#include "citefusion/eval.hpp"
#include "citefusion/experts.hpp"
#include "citefusion/fusion.hpp"
#include "citefusion/meta.hpp"
#include "citefusion/weighting.hpp"

namespace citefusion {

inline constexpr int kBundleVersion = 1;
inline constexpr const char* kBundleFormat = "citefusion-ensemble-bundle";

struct PipelineConfig {
  Setting setting = Setting::WS;
  std::uint64_t seed = 0;
  TrainConfig expert{};
  MetaTrainConfig meta{};
  std::size_t feature_dimension = kDefaultFeatureDimension;
};

// Everything the service needs to classify and explain: the schema, 2K
// experts in slot order, the FFNN meta head, the explanation baseline and
// the validation-fitted weighting heads.
struct EnsembleBundle {
  LabelSchema schema;
  Setting setting = Setting::WS;
  std::uint64_t seed = 0;
  std::vector<BinaryExpert> experts;
  FfnnParams meta;
  ZVector baseline;
  std::vector<ClassWeights> geometric_weights;
  std::vector<StackingHead> stacking_heads;

  std::size_t num_classes() const { return schema.size(); }
  // Throws when the experts, head or baseline do not fit the schema.
  void validate() const;
};

// Computes z-vectors for every instance of `instances` with the bundle's
// setting.
ZSet extract_z(const EnsembleBundle& bundle, std::span<const CitationInstance> instances);
ZSet extract_z(const ExpertPanel& panel, std::span<const CitationInstance> instances,
               Setting setting);

struct PipelineResult {
  EnsembleBundle bundle;
  std::vector<TrainLog> expert_logs;  // slot order
  TrainLog meta_log;
  ZSet train_z;
  ZSet val_z;
  ZSet test_z;
  std::vector<std::string> warnings;
};

// Per-expert seeds derive from `config.seed` and the (class, variant) slot;
// each job owns its data and RNG, so the result does not depend on the
// order the jobs run in.
PipelineResult train_pipeline(const Dataset& dataset, const PipelineConfig& config);

// Writes per-evaluation validation losses of every expert and the meta head:
// model,step,batches_seen,epoch,validation_loss,learning_rate
void write_training_log(std::ostream& out, const PipelineResult& result);

std::string bundle_to_json(const EnsembleBundle& bundle);
EnsembleBundle bundle_from_json(const std::string& text);
void save_bundle(const std::filesystem::path& path, const EnsembleBundle& bundle);
EnsembleBundle load_bundle(const std::filesystem::path& path);

// Level-1 strategies comparable on cached z-vectors.
enum class Strategy {
  max,
  avg,
  maj,
  weighted_max,
  weighted_avg,
  weighted_maj,
  stackingc,
  ffnn,
  lr,
  knn
};

Strategy parse_strategy(std::string_view name);
std::string_view to_string(Strategy strategy);
std::span<const Strategy> all_strategies();

struct AggregateInputs {
  const ZSet* train = nullptr;  // ffnn / lr / knn
  const ZSet* val = nullptr;    // geometric weights / StackingC / ffnn early stopping
  double majority_threshold = 0.5;
  MetaTrainConfig meta{};
  std::size_t knn_k = 5;
};

// Fits (when supervised) and applies a strategy to every row of `test`.
std::vector<ClassIndex> aggregate(Strategy strategy, const ZSet& test, std::size_t num_classes,
                                  const AggregateInputs& inputs);

struct InstabilityOptions {
  PipelineConfig base{};
  std::vector<std::uint64_t> seeds;
  // Called after each completed run (progress reporting).
  std::function<void(std::size_t, const RunRecord&)> on_run;
};

// Each seed runs the full pipeline in isolation and is scored on the test
// split. A failing run stops the harness and marks the report partial.
InstabilityReport instability_run(const Dataset& dataset, const InstabilityOptions& options);

}  // namespace citefusion
