// citefusion command-line driver.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "citefusion/explain.hpp"
#include "citefusion/http_server.hpp"
#include "citefusion/pipeline.hpp"
#include "citefusion/report.hpp"
#include "citefusion/service.hpp"
#include "citefusion/synthetic.hpp"

namespace fs = std::filesystem;
using namespace citefusion;

namespace {

LabelSchema resolve_schema(const std::string& name) {
  if (name == "scicite") return scicite_schema();
  if (name == "aclarc" || name == "acl-arc") return aclarc_schema();
  if (name == "synthetic") return synthetic_schema();
  return load_schema(name);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

template <typename F>
void with_file(const fs::path& p, F&& f) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  f(out);
}

// "1..10", "3,5,9" or a mix such as "1..3,8".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    const auto dots = part.find("..");
    try {
      if (dots == std::string::npos) {
        seeds.push_back(std::stoull(part));
      } else {
        const auto lo = std::stoull(part.substr(0, dots));
        const auto hi = std::stoull(part.substr(dots + 2));
        if (hi < lo) throw InvalidArgument("empty seed range " + part);
        for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
      }
    } catch (const std::logic_error&) {
      throw InvalidArgument("bad seed list '" + text + "'");
    }
  }
  return seeds;
}

struct DatasetArgs {
  std::string path;
  std::string schema = "scicite";
  std::string default_split = "train";

  void add(CLI::App* app) {
    app->add_option("--dataset", path, "JSON-lines dataset")->required()->check(CLI::ExistingFile);
    app->add_option("--schema", schema, "scicite, aclarc, synthetic or a schema file");
    app->add_option("--default-split", default_split,
                    "split for records without a split field");
  }
  Dataset load() const {
    LoadOptions opts;
    opts.default_split = parse_split(default_split);
    return load_dataset(path, resolve_schema(schema), opts);
  }
};

struct TrainArgs {
  std::string setting = "WS";
  std::uint64_t seed = 0;
  int expert_epochs = 20;
  double expert_lr = 0.1;
  int meta_epochs = 200;
  double meta_lr = 0.01;
  std::size_t hidden = 32;
  std::size_t dimension = kDefaultFeatureDimension;

  void add(CLI::App* app) {
    app->add_option("--setting", setting, "WS or WoS");
    app->add_option("--seed", seed, "base seed");
    app->add_option("--expert-epochs", expert_epochs, "");
    app->add_option("--expert-lr", expert_lr, "");
    app->add_option("--meta-epochs", meta_epochs, "");
    app->add_option("--meta-lr", meta_lr, "");
    app->add_option("--hidden", hidden, "FFNN hidden width");
    app->add_option("--feature-dimension", dimension, "hashed feature space size");
  }
  PipelineConfig config() const {
    PipelineConfig c;
    c.setting = parse_setting(setting);
    c.seed = seed;
    c.expert.max_epochs = expert_epochs;
    c.expert.learning_rate = expert_lr;
    c.meta.loop.max_epochs = meta_epochs;
    c.meta.loop.learning_rate = meta_lr;
    c.meta.hidden_width = hidden;
    c.feature_dimension = dimension;
    return c;
  }
};

ZSet load_z(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_zset(in);
}

std::optional<EnsembleBundle> maybe_bundle(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_bundle(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"citefusion: OVA citation-intent ensemble"};
  app.set_config("--config", "", "TOML/INI file with option defaults (one [section] per subcommand)");
  app.require_subcommand(1);
  app.fallthrough();  // --config may follow the subcommand name
  app.option_defaults()->always_capture_default();

  // train
  auto* train = app.add_subcommand("train", "train experts and the meta head, write a bundle");
  DatasetArgs train_data;
  TrainArgs train_args;
  std::string train_out, train_log, train_z_dir;
  train_data.add(train);
  train_args.add(train);
  train->add_option("--out", train_out, "bundle path")->required();
  train->add_option("--log", train_log, "validation-loss CSV");
  train->add_option("--z-dir", train_z_dir, "also cache train/val/test z-vectors here");

  // extract-z
  auto* ez = app.add_subcommand("extract-z", "cache z-vectors of one split");
  DatasetArgs ez_data;
  std::string ez_bundle, ez_split = "test", ez_out;
  ez_data.add(ez);
  ez->add_option("--bundle", ez_bundle)->required()->check(CLI::ExistingFile);
  ez->add_option("--split", ez_split, "train, val or test");
  ez->add_option("--out", ez_out, "CSV path (stdout when omitted)");

  // aggregate
  auto* agg = app.add_subcommand("aggregate", "apply a level-1 strategy to cached z-vectors");
  std::string agg_strategy = "max", agg_z, agg_val, agg_train, agg_format = "json";
  double agg_threshold = 0.5;
  std::size_t agg_k = 5;
  std::uint64_t agg_seed = 0;
  std::string agg_names;
  for (auto s : all_strategies()) agg_names += (agg_names.empty() ? "" : ", ") + std::string(to_string(s));
  agg->add_option("--strategy", agg_strategy, agg_names);
  agg->add_option("--z", agg_z, "test z-vector CSV")->required()->check(CLI::ExistingFile);
  agg->add_option("--val", agg_val, "validation z-vectors (weighted / stackingc / ffnn)");
  agg->add_option("--train", agg_train, "training z-vectors (ffnn / lr / knn)");
  agg->add_option("--threshold", agg_threshold, "majority-vote threshold");
  agg->add_option("--knn-k", agg_k, "");
  agg->add_option("--seed", agg_seed, "FFNN seed");
  agg->add_option("--format", agg_format, "json or table");

  // explain
  auto* ex = app.add_subcommand("explain", "explanation reports, masses and correlations");
  DatasetArgs ex_data;
  std::string ex_bundle, ex_split = "test", ex_dir;
  std::size_t ex_limit = 0;
  ex_data.add(ex);
  ex->add_option("--bundle", ex_bundle)->required()->check(CLI::ExistingFile);
  ex->add_option("--split", ex_split, "");
  ex->add_option("--out-dir", ex_dir, "output directory")->required();
  ex->add_option("--limit", ex_limit, "explain at most this many instances (0 = all)");

  // instability
  auto* inst = app.add_subcommand("instability", "multi-seed instability harness");
  DatasetArgs inst_data;
  TrainArgs inst_args;
  std::string inst_seeds = "1..10", inst_out, inst_losses;
  inst_data.add(inst);
  inst_args.add(inst);
  inst->add_option("--seeds", inst_seeds, "e.g. 1..10 or 1,5,9");
  inst->add_option("--out", inst_out, "metrics CSV (stdout when omitted)");
  inst->add_option("--losses", inst_losses, "per-expert best validation loss CSV");

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP classification service");
  std::string sv_ws, sv_wos, sv_host = "127.0.0.1";
  int sv_port = 8080;
  serve->add_option("--ws", sv_ws, "WS-trained bundle");
  serve->add_option("--wos", sv_wos, "WoS-trained bundle");
  serve->add_option("--host", sv_host, "");
  serve->add_option("--port", sv_port, "");

  // classify
  auto* cls = app.add_subcommand("classify", "classify a request file, write the result JSON");
  std::string cl_ws, cl_wos, cl_input, cl_out, cl_verify, cl_mode;
  double cl_threshold = -1;
  cls->add_option("--ws", cl_ws, "WS-trained bundle");
  cls->add_option("--wos", cl_wos, "WoS-trained bundle");
  cls->add_option("--input", cl_input, "request JSON")->required()->check(CLI::ExistingFile);
  cls->add_option("--mode", cl_mode, "override the request mode");
  cls->add_option("--threshold", cl_threshold, "override the request threshold");
  cls->add_option("--out", cl_out, "result path (stdout when omitted)");
  cls->add_option("--verify", cl_verify, "compare the result with this file byte for byte")
      ->check(CLI::ExistingFile);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic corpus");
  SyntheticOptions gen_opts;
  std::string gen_out;
  gen->add_option("--out", gen_out)->required();
  gen->add_option("--size", gen_opts.size, "");
  gen->add_option("--seed", gen_opts.seed, "");
  gen->add_option("--cue-noise", gen_opts.cue_noise, "");
  gen->add_option("--cues", gen_opts.cues_per_sentence, "");
  gen->add_option("--title-signal", gen_opts.title_signal, "");
  gen->add_option("--missing-title", gen_opts.missing_title, "");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const Dataset d = train_data.load();
      PipelineResult r = train_pipeline(d, train_args.config());
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
      save_bundle(train_out, r.bundle);
      if (!train_log.empty()) with_file(train_log, [&](std::ostream& o) { write_training_log(o, r); });
      if (!train_z_dir.empty()) {
        const fs::path dir(train_z_dir);
        with_file(dir / "train.csv", [&](std::ostream& o) { write_zset(o, r.train_z, d.schema); });
        with_file(dir / "val.csv", [&](std::ostream& o) { write_zset(o, r.val_z, d.schema); });
        with_file(dir / "test.csv", [&](std::ostream& o) { write_zset(o, r.test_z, d.schema); });
      }
      std::cerr << "wrote " << train_out << '\n';
    } else if (*ez) {
      const EnsembleBundle b = load_bundle(ez_bundle);
      const Dataset d = ez_data.load();
      if (d.schema != b.schema) throw InvalidArgument("dataset schema does not match the bundle");
      const ZSet z = extract_z(b, d.split(parse_split(ez_split)));
      if (ez_out.empty()) {
        write_zset(std::cout, z, b.schema);
      } else {
        with_file(ez_out, [&](std::ostream& o) { write_zset(o, z, b.schema); });
      }
    } else if (*agg) {
      const Strategy s = parse_strategy(agg_strategy);
      const ZSet test = load_z(agg_z);
      std::optional<ZSet> val, tr;
      if (!agg_val.empty()) val = load_z(agg_val);
      if (!agg_train.empty()) tr = load_z(agg_train);
      AggregateInputs in;
      in.val = val ? &*val : nullptr;
      in.train = tr ? &*tr : nullptr;
      in.majority_threshold = agg_threshold;
      in.knn_k = agg_k;
      in.meta.loop.seed = agg_seed;
      const std::size_t k = test.num_classes();
      const auto pred = aggregate(s, test, k, in);
      const MetricsReport m = metrics(confusion(test.labels, pred, k));
      if (agg_format == "table") {
        std::cout << metrics_table(m, test.class_names);
      } else if (agg_format == "json") {
        std::cout << metrics_json(m, test.class_names) << '\n';
      } else {
        throw InvalidArgument("--format must be json or table");
      }
    } else if (*ex) {
      const EnsembleBundle b = load_bundle(ex_bundle);
      const Dataset d = ex_data.load();
      if (d.schema != b.schema) throw InvalidArgument("dataset schema does not match the bundle");
      auto items = d.split(parse_split(ex_split));
      if (ex_limit > 0 && items.size() > ex_limit) items.resize(ex_limit);
      const fs::path dir(ex_dir);
      fs::create_directories(dir);
      std::vector<MassRecord> masses;
      with_file(dir / "reports.jsonl", [&](std::ostream& o) {
        for (std::size_t i = 0; i < items.size(); ++i) {
          const Json rep = explain_instance_report(b, items[i], std::to_string(i));
          o << rep.dump() << '\n';
          MassRecord rec;
          rec.predicted_class = *b.schema.find(rep["predicted_class"].get<std::string>());
          for (const auto& e : rep["experts"]) {
            AttributionMass m;
            m.positive = e["mass"]["positive"].get<double>();
            m.negative = e["mass"]["negative"].get<double>();
            m.signed_mass = e["mass"]["signed"].get<double>();
            rec.experts.push_back(m);
          }
          masses.push_back(std::move(rec));
        }
      });
      const MassStatistics stats = mass_statistics(masses, b.num_classes());
      with_file(dir / "masses.csv", [&](std::ostream& o) { write_mass_csv(o, stats, b.schema); });
      for (const auto& g : stats.groups) {
        if (g.too_small) continue;
        with_file(dir / ("correlation_" + b.schema.class_name(g.predicted_class) + ".csv"),
                  [&](std::ostream& o) { write_correlation_csv(o, g, b.schema); });
      }
      std::cerr << "explained " << items.size() << " instances into " << dir.string() << '\n';
    } else if (*inst) {
      const Dataset d = inst_data.load();
      InstabilityOptions opts;
      opts.base = inst_args.config();
      opts.seeds = parse_seeds(inst_seeds);
      opts.on_run = [](std::size_t i, const RunRecord& r) {
        std::fprintf(stderr, "run %zu seed %llu: accuracy %.4f macro-F1 %.4f\n", i,
                     static_cast<unsigned long long>(r.seed), r.accuracy, r.macro_f1);
      };
      const InstabilityReport rep = instability_run(d, opts);
      if (inst_out.empty()) {
        write_instability_csv(std::cout, rep);
      } else {
        with_file(inst_out, [&](std::ostream& o) { write_instability_csv(o, rep); });
      }
      if (!inst_losses.empty()) {
        with_file(inst_losses, [&](std::ostream& o) { write_expert_loss_csv(o, rep, d.schema); });
      }
      if (rep.partial) {
        std::cerr << "error: " << rep.failure << '\n';
        return 1;
      }
    } else if (*serve) {
      const Classifier c(maybe_bundle(sv_ws), maybe_bundle(sv_wos));
      ServerConfig cfg;
      cfg.host = sv_host;
      cfg.port = sv_port;
      HttpService svc(c, cfg);
      const int port = svc.bind();
      std::cerr << "listening on " << sv_host << ':' << port << '\n';
      svc.listen();
    } else if (*cls) {
      const Classifier c(maybe_bundle(cl_ws), maybe_bundle(cl_wos));
      ClassifyRequest req = parse_classify_request(slurp(cl_input));
      if (!cl_mode.empty()) req.mode = parse_mode(cl_mode);
      if (cl_threshold >= 0) req.threshold = cl_threshold;
      validate_request(req);
      const std::string body = classify_body(c, req);
      if (!cl_verify.empty()) {
        if (slurp(cl_verify) != body) {
          std::cerr << "verify: " << cl_verify << " differs from the service output\n";
          return 1;
        }
        std::cerr << "verify: identical\n";
      } else if (cl_out.empty()) {
        std::cout << body;
      } else {
        write_file(cl_out, body);
      }
    } else if (*gen) {
      save_dataset(gen_out, generate_synthetic(gen_opts));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
