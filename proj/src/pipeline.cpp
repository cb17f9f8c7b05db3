#include "citefusion/pipeline.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "citefusion/errors.hpp"
#include "citefusion/explain.hpp"
#include "json.hpp"

namespace citefusion {

using nlohmann::json;

void EnsembleBundle::validate() const {
  const std::size_t k = schema.size();
  if (experts.size() != 2 * k) {
    throw InvalidArgument("bundle holds " + std::to_string(experts.size()) + " experts, expected " +
                          std::to_string(2 * k));
  }
  ExpertPanel panel(experts, k);  // throws on layout problems
  (void)panel;
  meta.validate();
  if (meta.input != 2 * k || meta.output != k) {
    throw InvalidArgument("meta head shape does not match the schema");
  }
  baseline.validate(k);
  if (!geometric_weights.empty() && geometric_weights.size() != k) {
    throw InvalidArgument("bundle geometric weights do not cover every class");
  }
  if (!stacking_heads.empty() && stacking_heads.size() != k) {
    throw InvalidArgument("bundle StackingC heads do not cover every class");
  }
}

ZSet extract_z(const ExpertPanel& panel, std::span<const CitationInstance> instances,
               Setting setting) {
  ZSet out;
  out.rows.reserve(instances.size());
  out.labels.reserve(instances.size());
  for (const auto& inst : instances) {
    out.rows.push_back(panel.assemble(format_input(inst, setting).text));
    out.labels.push_back(inst.label);
  }
  return out;
}

ZSet extract_z(const EnsembleBundle& bundle, std::span<const CitationInstance> instances) {
  return extract_z(ExpertPanel(bundle.experts, bundle.num_classes()), instances, bundle.setting);
}

PipelineResult train_pipeline(const Dataset& dataset, const PipelineConfig& config) {
  const std::size_t k = dataset.schema.size();
  const auto train = dataset.split(Split::train);
  const auto val = dataset.split(Split::val);
  const auto test = dataset.split(Split::test);
  if (train.empty()) throw InvalidArgument("dataset has no training split");
  if (val.empty()) throw InvalidArgument("dataset has no validation split");

  PipelineResult result;
  EnsembleBundle& bundle = result.bundle;
  bundle.schema = dataset.schema;
  bundle.setting = config.setting;
  bundle.seed = config.seed;
  bundle.experts.resize(2 * k);
  result.expert_logs.resize(2 * k);

  for (std::size_t j = 0; j < k; ++j) {
    const BinaryDataset train_j = ova_binarize(train, j, config.setting);
    const BinaryDataset val_j = ova_binarize(val, j, config.setting);
    for (Variant variant : {Variant::domain, Variant::general}) {
      const std::size_t slot = slot_index(j, variant);
      TrainConfig expert_config = config.expert;
      expert_config.seed = mix_seed(config.seed, slot);
      TrainedExpert trained =
          train_expert(train_j, val_j, variant, expert_config, config.feature_dimension);
      trained.expert.set_metadata(
          {dataset.schema.dataset_name(), config.setting, expert_config.seed});
      bundle.experts[slot] = std::move(trained.expert);
      result.expert_logs[slot] = std::move(trained.log);
    }
  }

  const ExpertPanel panel(bundle.experts, k);
  result.train_z = extract_z(panel, train, config.setting);
  result.val_z = extract_z(panel, val, config.setting);
  result.test_z = extract_z(panel, test, config.setting);

  MetaTrainConfig meta_config = config.meta;
  meta_config.loop.seed = mix_seed(config.seed, 0xFFFF);
  TrainedFfnn meta = train_ffnn(result.train_z, result.val_z, k, meta_config);
  bundle.meta = std::move(meta.params);
  result.meta_log = std::move(meta.log);
  result.warnings = std::move(meta.warnings);

  bundle.baseline = mean_baseline(result.train_z.rows);
  if (result.val_z.rows.size() >= 3) {
    bundle.geometric_weights = fit_geometric_weights(result.val_z);
    bundle.stacking_heads = fit_stackingc(result.val_z);
  }
  return result;
}

void write_training_log(std::ostream& out, const PipelineResult& result) {
  out << "model,step,batches_seen,epoch,validation_loss,learning_rate\n";
  auto dump = [&](const std::string& name, const TrainLog& log) {
    for (const auto& e : log.evaluations) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.10g,%.6g", e.validation_loss, e.learning_rate);
      out << name << ',' << e.step << ',' << e.batches_seen << ',' << e.epoch << ',' << buf << '\n';
    }
  };
  for (std::size_t s = 0; s < result.expert_logs.size(); ++s) {
    dump(expert_label(result.bundle.schema, s), result.expert_logs[s]);
  }
  dump("meta", result.meta_log);
}

// ---------------------------------------------------------------- bundle I/O

namespace {

json expert_to_json(const BinaryExpert& e) {
  json j;
  j["class"] = e.target_class();
  j["variant"] = std::string(to_string(e.variant()));
  j["dimension"] = e.featurizer().dimension();
  j["bias"] = e.bias();
  json weights = json::array();
  const auto& w = e.weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] != 0.0) weights.push_back(json::array({i, w[i]}));
  }
  j["weights"] = std::move(weights);
  json idf = json::array();
  for (const auto& [idx, value] : e.featurizer().idf_entries()) {
    idf.push_back(json::array({idx, value}));
  }
  j["idf"] = std::move(idf);
  j["default_idf"] = e.featurizer().default_idf();
  j["metadata"] = {{"dataset", e.metadata().dataset},
                   {"setting", std::string(to_string(e.metadata().setting))},
                   {"seed", e.metadata().seed}};
  return j;
}

BinaryExpert expert_from_json(const json& j) {
  const Variant variant = parse_variant(j.at("variant").get<std::string>());
  const auto dimension = j.at("dimension").get<std::size_t>();
  std::vector<std::pair<std::uint32_t, double>> idf;
  for (const auto& e : j.at("idf")) idf.emplace_back(e.at(0).get<std::uint32_t>(), e.at(1).get<double>());
  Featurizer f = Featurizer::restore(variant, dimension, std::move(idf),
                                     j.at("default_idf").get<double>());
  BinaryExpert expert(j.at("class").get<std::size_t>(), std::move(f));
  std::vector<double> w(dimension, 0.0);
  for (const auto& e : j.at("weights")) {
    const auto idx = e.at(0).get<std::size_t>();
    if (idx >= dimension) throw ParseError("expert weight index out of range");
    w[idx] = e.at(1).get<double>();
  }
  expert.set_parameters(std::move(w), j.at("bias").get<double>());
  const json& md = j.at("metadata");
  expert.set_metadata({md.at("dataset").get<std::string>(),
                       parse_setting(md.at("setting").get<std::string>()),
                       md.at("seed").get<std::uint64_t>()});
  expert.mark_trained();
  return expert;
}

}  // namespace

std::string bundle_to_json(const EnsembleBundle& b) {
  json j;
  j["format"] = kBundleFormat;
  j["version"] = kBundleVersion;
  j["metadata"] = {{"dataset", b.schema.dataset_name()},
                   {"setting", std::string(to_string(b.setting))},
                   {"seed", b.seed},
                   {"hidden_width", b.meta.hidden}};
  j["schema"] = {{"dataset", b.schema.dataset_name()},
                 {"classes", b.schema.classes()},
                 {"cito", b.schema.cito_iris()}};
  json experts = json::array();
  for (const auto& e : b.experts) experts.push_back(expert_to_json(e));
  j["experts"] = std::move(experts);
  j["meta"] = {{"kind", "ffnn"},
               {"input", b.meta.input},
               {"hidden", b.meta.hidden},
               {"output", b.meta.output},
               {"seed", b.meta.seed},
               {"w1", b.meta.w1},
               {"b1", b.meta.b1},
               {"w2", b.meta.w2},
               {"b2", b.meta.b2}};
  j["baseline"] = b.baseline.values;
  json weights = json::array();
  for (const auto& w : b.geometric_weights) {
    weights.push_back({{"class", w.class_index},
                       {"raw", w.raw},
                       {"weights", w.weights},
                       {"degenerate", w.degenerate},
                       {"residual", w.residual_sum_of_squares}});
  }
  j["geometric_weights"] = std::move(weights);
  json heads = json::array();
  for (const auto& h : b.stacking_heads) {
    heads.push_back({{"class", h.class_index},
                     {"theta", h.theta},
                     {"intercept", h.intercept},
                     {"degenerate", h.degenerate},
                     {"residual", h.residual_sum_of_squares}});
  }
  j["stacking_heads"] = std::move(heads);
  return j.dump();
}

EnsembleBundle bundle_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("bundle is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kBundleFormat) throw ParseError("not an ensemble bundle");
    if (j.at("version").get<int>() != kBundleVersion) {
      throw ParseError("unsupported bundle version " + j.at("version").dump());
    }
    EnsembleBundle b;
    const json& s = j.at("schema");
    b.schema = LabelSchema(s.at("dataset").get<std::string>(),
                           s.at("classes").get<std::vector<std::string>>(),
                           s.at("cito").get<std::vector<std::string>>());
    const json& md = j.at("metadata");
    b.setting = parse_setting(md.at("setting").get<std::string>());
    b.seed = md.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("experts")) b.experts.push_back(expert_from_json(e));
    const json& m = j.at("meta");
    b.meta.input = m.at("input").get<std::size_t>();
    b.meta.hidden = m.at("hidden").get<std::size_t>();
    b.meta.output = m.at("output").get<std::size_t>();
    b.meta.seed = m.at("seed").get<std::uint64_t>();
    b.meta.w1 = m.at("w1").get<std::vector<double>>();
    b.meta.b1 = m.at("b1").get<std::vector<double>>();
    b.meta.w2 = m.at("w2").get<std::vector<double>>();
    b.meta.b2 = m.at("b2").get<std::vector<double>>();
    b.baseline = ZVector(j.at("baseline").get<std::vector<double>>());
    for (const auto& w : j.at("geometric_weights")) {
      ClassWeights cw;
      cw.class_index = w.at("class").get<std::size_t>();
      cw.raw = w.at("raw").get<std::array<double, 2>>();
      cw.weights = w.at("weights").get<std::array<double, 2>>();
      cw.degenerate = w.at("degenerate").get<bool>();
      cw.residual_sum_of_squares = w.at("residual").get<double>();
      b.geometric_weights.push_back(cw);
    }
    for (const auto& h : j.at("stacking_heads")) {
      StackingHead sh;
      sh.class_index = h.at("class").get<std::size_t>();
      sh.theta = h.at("theta").get<std::array<double, 2>>();
      sh.intercept = h.at("intercept").get<double>();
      sh.degenerate = h.at("degenerate").get<bool>();
      sh.residual_sum_of_squares = h.at("residual").get<double>();
      b.stacking_heads.push_back(sh);
    }
    b.validate();
    return b;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed bundle: ") + e.what());
  }
}

void save_bundle(const std::filesystem::path& path, const EnsembleBundle& bundle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write bundle " + path.string());
  out << bundle_to_json(bundle);
}

EnsembleBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open bundle " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return bundle_from_json(buffer.str());
}

// ---------------------------------------------------------------- strategies

namespace {

constexpr std::array kStrategies{Strategy::max,          Strategy::avg,          Strategy::maj,
                                 Strategy::weighted_max, Strategy::weighted_avg,
                                 Strategy::weighted_maj, Strategy::stackingc,    Strategy::ffnn,
                                 Strategy::lr,           Strategy::knn};

const ZSet& require(const ZSet* set, const char* what, Strategy s) {
  if (set == nullptr || set->rows.empty()) {
    throw InvalidArgument("strategy '" + std::string(to_string(s)) + "' needs " + what + " z-vectors");
  }
  return *set;
}

}  // namespace

std::span<const Strategy> all_strategies() { return kStrategies; }

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::max: return "max";
    case Strategy::avg: return "avg";
    case Strategy::maj: return "maj";
    case Strategy::weighted_max: return "w-max";
    case Strategy::weighted_avg: return "w-avg";
    case Strategy::weighted_maj: return "w-maj";
    case Strategy::stackingc: return "stackingc";
    case Strategy::ffnn: return "ffnn";
    case Strategy::lr: return "lr";
    case Strategy::knn: return "knn";
  }
  return "max";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : kStrategies) {
    if (to_string(s) == name) return s;
  }
  throw InvalidArgument("unknown strategy '" + std::string(name) + "'");
}

std::vector<ClassIndex> aggregate(Strategy strategy, const ZSet& test, std::size_t k,
                                  const AggregateInputs& in) {
  for (const auto& z : test.rows) z.validate(k);
  std::vector<ClassIndex> out;
  out.reserve(test.rows.size());
  switch (strategy) {
    case Strategy::max:
      for (const auto& z : test.rows) out.push_back(max_vote(z));
      break;
    case Strategy::avg:
      for (const auto& z : test.rows) out.push_back(avg_vote(z).label);
      break;
    case Strategy::maj:
      for (const auto& z : test.rows) out.push_back(majority_vote(z, in.majority_threshold));
      break;
    case Strategy::weighted_max:
    case Strategy::weighted_avg:
    case Strategy::weighted_maj: {
      const auto w = fit_geometric_weights(require(in.val, "validation", strategy));
      for (const auto& z : test.rows) {
        if (strategy == Strategy::weighted_max) {
          out.push_back(weighted_max_vote(z, w));
        } else if (strategy == Strategy::weighted_avg) {
          out.push_back(weighted_avg_vote(z, w));
        } else {
          out.push_back(weighted_majority_vote(z, w, in.majority_threshold));
        }
      }
      break;
    }
    case Strategy::stackingc: {
      const auto heads = fit_stackingc(require(in.val, "validation", strategy));
      for (const auto& z : test.rows) out.push_back(stackingc_predict(z, heads).label);
      break;
    }
    case Strategy::ffnn: {
      const TrainedFfnn t = train_ffnn(require(in.train, "training", strategy),
                                       require(in.val, "validation", strategy), k, in.meta);
      for (const auto& z : test.rows) out.push_back(ffnn_predict(t.params, z).label);
      break;
    }
    case Strategy::lr: {
      const LogisticHead head = train_lr_head(require(in.train, "training", strategy), k);
      for (const auto& z : test.rows) out.push_back(head.predict(z.values).label);
      break;
    }
    case Strategy::knn: {
      const KnnHead head = train_knn_head(require(in.train, "training", strategy), k, in.knn_k);
      for (const auto& z : test.rows) out.push_back(head.predict(z.values).label);
      break;
    }
  }
  return out;
}

InstabilityReport instability_run(const Dataset& dataset, const InstabilityOptions& options) {
  if (options.seeds.size() < 2) throw InvalidArgument("instability analysis needs at least 2 seeds");
  InstabilityReport report;
  for (std::size_t r = 0; r < options.seeds.size(); ++r) {
    try {
      PipelineConfig config = options.base;
      config.seed = options.seeds[r];
      const PipelineResult result = train_pipeline(dataset, config);
      if (result.test_z.rows.empty()) throw InvalidArgument("dataset has no test split");
      std::vector<ClassIndex> predicted;
      for (const auto& z : result.test_z.rows) {
        predicted.push_back(ffnn_predict(result.bundle.meta, z).label);
      }
      const MetricsReport m =
          metrics(confusion(result.test_z.labels, predicted, dataset.schema.size()));
      RunRecord rec;
      rec.seed = config.seed;
      rec.accuracy = m.accuracy;
      rec.macro_f1 = m.macro_f1;
      for (const auto& log : result.expert_logs) rec.expert_best_losses.push_back(log.best_validation_loss());
      rec.meta_best_loss = result.meta_log.best_validation_loss();
      report.runs.push_back(rec);
      if (options.on_run) options.on_run(r, rec);
    } catch (const std::exception& e) {
      report.partial = true;
      report.failure = "run " + std::to_string(r) + " (seed " + std::to_string(options.seeds[r]) +
                       ") failed: " + e.what();
      break;
    }
  }
  report.summarize();
  return report;
}

}  // namespace citefusion
