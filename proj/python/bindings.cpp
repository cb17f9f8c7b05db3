#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "citefusion/explain.hpp"
#include "citefusion/pipeline.hpp"
#include "citefusion/service.hpp"
#include "citefusion/synthetic.hpp"

namespace py = pybind11;
using namespace citefusion;

namespace {

ZVector to_z(const std::vector<double>& v) { return ZVector(v); }

std::vector<ZVector> to_rows(const std::vector<std::vector<double>>& rows) {
  std::vector<ZVector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.emplace_back(r);
  return out;
}

ZSet to_zset(const std::vector<std::vector<double>>& rows, const std::vector<ClassIndex>& labels) {
  if (rows.size() != labels.size()) throw InvalidArgument("rows and labels differ in length");
  ZSet z;
  z.rows = to_rows(rows);
  z.labels = labels;
  return z;
}

py::object json_to_py(const Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::dict metrics_dict(const MetricsReport& m) {
  py::dict d;
  d["accuracy"] = m.accuracy;
  d["macro_f1"] = m.macro_f1;
  d["micro_f1"] = m.micro_f1;
  d["weighted_f1"] = m.weighted_f1;
  py::list per;
  for (const auto& c : m.per_class) {
    py::dict e;
    e["precision"] = c.precision;
    e["recall"] = c.recall;
    e["f1"] = c.f1;
    e["ova_accuracy"] = c.ova_accuracy;
    e["support"] = c.support;
    e["f1_undefined"] = c.f1_undefined;
    per.append(e);
  }
  d["per_class"] = per;
  return d;
}

}  // namespace

PYBIND11_MODULE(_citefusion, m) {
  m.doc() = "OVA citation-intent ensemble: experts, voting, weighting, meta heads, Shapley";
  m.attr("__version__") = "0.1.0";

  // registered base-first: later translators are tried first
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);

  py::enum_<Setting>(m, "Setting").value("WS", Setting::WS).value("WoS", Setting::WoS);
  py::enum_<Split>(m, "Split")
      .value("train", Split::train)
      .value("val", Split::val)
      .value("test", Split::test);

  py::class_<LabelSchema>(m, "LabelSchema")
      .def(py::init<std::string, std::vector<std::string>, std::vector<std::string>>(),
           py::arg("dataset_name"), py::arg("classes"), py::arg("cito_iris"))
      .def_property_readonly("dataset_name", &LabelSchema::dataset_name)
      .def_property_readonly("classes", &LabelSchema::classes)
      .def_property_readonly("cito_iris", &LabelSchema::cito_iris)
      .def("find", &LabelSchema::find)
      .def("__len__", &LabelSchema::size)
      .def("cito", [](const LabelSchema& s, ClassIndex j) { return cito_for(s, j); });
  m.def("scicite_schema", &scicite_schema);
  m.def("aclarc_schema", &aclarc_schema);
  m.def("synthetic_schema", &synthetic_schema);

  py::class_<CitationInstance>(m, "CitationInstance")
      .def(py::init<>())
      .def_readwrite("section_title", &CitationInstance::section_title)
      .def_readwrite("context", &CitationInstance::context)
      .def_readwrite("label", &CitationInstance::label)
      .def_readwrite("split", &CitationInstance::split);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("schema", &Dataset::schema)
      .def_readonly("instances", &Dataset::instances)
      .def("count", &Dataset::count)
      .def("__len__", [](const Dataset& d) { return d.instances.size(); });
  m.def("load_dataset",
        [](const std::filesystem::path& p, const LabelSchema& s) { return load_dataset(p, s); },
        py::arg("path"), py::arg("schema"));
  m.def("save_dataset", &save_dataset, py::arg("path"), py::arg("dataset"));
  m.def(
      "generate_synthetic",
      [](std::size_t size, std::uint64_t seed, double cue_noise, double title_signal,
         double missing_title) {
        SyntheticOptions o;
        o.size = size;
        o.seed = seed;
        o.cue_noise = cue_noise;
        o.title_signal = title_signal;
        o.missing_title = missing_title;
        return generate_synthetic(o);
      },
      py::arg("size") = 2000, py::arg("seed") = 1, py::arg("cue_noise") = 0.1,
      py::arg("title_signal") = 0.85, py::arg("missing_title") = 0.0);
  m.def(
      "format_input",
      [](std::optional<std::string> title, const std::string& context, Setting s) {
        const FormattedInput f = format_input(title, context, s);
        return py::make_tuple(f.text, f.fell_back_to_wos);
      },
      py::arg("section_title"), py::arg("context"), py::arg("setting"));

  // voting on plain sequences laid out as [domain_0, general_0, domain_1, ...]
  m.def("max_vote", [](const std::vector<double>& z) { return max_vote(to_z(z)); }, py::arg("z"));
  m.def("avg_vote", [](const std::vector<double>& z) { return avg_vote(to_z(z)).label; }, py::arg("z"));
  m.def("consensus", [](const std::vector<double>& z) { return avg_vote(to_z(z)).consensus; },
        py::arg("z"));
  m.def("majority_vote",
        [](const std::vector<double>& z, double t) { return majority_vote(to_z(z), t); },
        py::arg("z"), py::arg("threshold") = 0.5);

  py::class_<ClassWeights>(m, "ClassWeights")
      .def_readonly("class_index", &ClassWeights::class_index)
      .def_readonly("raw", &ClassWeights::raw)
      .def_readonly("weights", &ClassWeights::weights)
      .def_readonly("degenerate", &ClassWeights::degenerate);
  m.def("fit_geometric_weights",
        [](const std::vector<std::vector<double>>& rows, const std::vector<ClassIndex>& labels) {
          return fit_geometric_weights(to_zset(rows, labels));
        },
        py::arg("rows"), py::arg("labels"));
  m.def("weighted_max_vote",
        [](const std::vector<double>& z, const std::vector<ClassWeights>& w) {
          return weighted_max_vote(to_z(z), w);
        });
  m.def("weighted_avg_vote",
        [](const std::vector<double>& z, const std::vector<ClassWeights>& w) {
          return weighted_avg_vote(to_z(z), w);
        });
  m.def("weighted_majority_vote",
        [](const std::vector<double>& z, const std::vector<ClassWeights>& w, double t) {
          return weighted_majority_vote(to_z(z), w, t);
        },
        py::arg("z"), py::arg("weights"), py::arg("threshold") = 0.5);

  py::class_<StackingHead>(m, "StackingHead")
      .def_readonly("class_index", &StackingHead::class_index)
      .def_readonly("theta", &StackingHead::theta)
      .def_readonly("intercept", &StackingHead::intercept)
      .def_readonly("degenerate", &StackingHead::degenerate);
  m.def("fit_stackingc",
        [](const std::vector<std::vector<double>>& rows, const std::vector<ClassIndex>& labels) {
          return fit_stackingc(to_zset(rows, labels));
        },
        py::arg("rows"), py::arg("labels"));
  m.def("stackingc_predict",
        [](const std::vector<double>& z, const std::vector<StackingHead>& heads) {
          const auto p = stackingc_predict(to_z(z), heads);
          return py::make_tuple(p.label, p.probabilities);
        });

  m.def(
      "shapley",
      [](const std::function<double(std::vector<double>)>& f, const std::vector<double>& z,
         const std::vector<double>& baseline) {
        const auto r = exact_shapley(
            [&](std::span<const double> x) { return f(std::vector<double>(x.begin(), x.end())); },
            z, baseline);
        return py::make_tuple(r.phi, r.efficiency_residual);
      },
      py::arg("value"), py::arg("z"), py::arg("baseline"),
      "Exact Shapley values of a Python value function; returns (phi, efficiency_residual).");

  m.def(
      "metrics",
      [](const std::vector<ClassIndex>& gold, const std::vector<ClassIndex>& pred, std::size_t k) {
        return metrics_dict(metrics(confusion(gold, pred, k)));
      },
      py::arg("gold"), py::arg("predicted"), py::arg("num_classes"));
  m.def(
      "metrics_from_confusion",
      [](const std::vector<std::vector<std::size_t>>& rows) {
        const auto cm = ConfusionMatrix::from_rows(rows);
        py::dict d = metrics_dict(metrics(cm));
        d["misclassified"] = cm.misclassified();
        d["total"] = cm.total();
        return d;
      },
      py::arg("rows"));

  py::class_<EnsembleBundle>(m, "Bundle")
      .def_readonly("schema", &EnsembleBundle::schema)
      .def_readonly("setting", &EnsembleBundle::setting)
      .def_readonly("seed", &EnsembleBundle::seed)
      .def("to_json", &bundle_to_json)
      .def_static("from_json", &bundle_from_json)
      .def("save", [](const EnsembleBundle& b, const std::filesystem::path& p) { save_bundle(p, b); })
      .def_static("load", &load_bundle)
      .def(
          "z",
          [](const EnsembleBundle& b, std::optional<std::string> title, const std::string& ctx) {
            const ExpertPanel panel(b.experts, b.num_classes());
            return panel.assemble(format_input(title, ctx, b.setting).text).values;
          },
          py::arg("section_title"), py::arg("context"))
      .def(
          "explain",
          [](const EnsembleBundle& b, std::optional<std::string> title, const std::string& ctx) {
            return json_to_py(explain_instance_report(b, format_input(title, ctx, b.setting)));
          },
          py::arg("section_title"), py::arg("context"));

  py::class_<PipelineResult>(m, "PipelineResult")
      .def_readonly("bundle", &PipelineResult::bundle)
      .def_property_readonly("test_z", [](const PipelineResult& r) {
        std::vector<std::vector<double>> rows;
        for (const auto& z : r.test_z.rows) rows.push_back(z.values);
        return py::make_tuple(rows, r.test_z.labels);
      })
      .def_property_readonly("val_z", [](const PipelineResult& r) {
        std::vector<std::vector<double>> rows;
        for (const auto& z : r.val_z.rows) rows.push_back(z.values);
        return py::make_tuple(rows, r.val_z.labels);
      })
      .def("evaluate", [](const PipelineResult& r, const std::string& strategy) {
        AggregateInputs in;
        in.train = &r.train_z;
        in.val = &r.val_z;
        const auto k = r.bundle.num_classes();
        const auto pred = aggregate(parse_strategy(strategy), r.test_z, k, in);
        return metrics_dict(metrics(confusion(r.test_z.labels, pred, k)));
      });

  m.def(
      "train",
      [](const Dataset& d, Setting setting, std::uint64_t seed) {
        PipelineConfig c;
        c.setting = setting;
        c.seed = seed;
        py::gil_scoped_release release;
        return train_pipeline(d, c);
      },
      py::arg("dataset"), py::arg("setting") = Setting::WS, py::arg("seed") = 0);

  py::class_<Classifier>(m, "Classifier")
      .def(py::init<std::optional<EnsembleBundle>, std::optional<EnsembleBundle>>(),
           py::arg("ws") = py::none(), py::arg("wos") = py::none())
      .def(
          "classify",
          [](const Classifier& c, const std::string& request_json) {
            return classify_body(c, parse_classify_request(request_json));
          },
          py::arg("request_json"), "Returns the /classify response body.")
      .def("schema", [](const Classifier& c) { return json_to_py(c.schema_json()); });
}
