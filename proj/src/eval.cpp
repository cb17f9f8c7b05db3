#include "citefusion/eval.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "citefusion/errors.hpp"
#include "citefusion/explain.hpp"
#include "json.hpp"

namespace citefusion {

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::size_t>>& rows) {
  ConfusionMatrix m(rows.size());
  for (std::size_t g = 0; g < rows.size(); ++g) {
    if (rows[g].size() != rows.size()) throw InvalidArgument("confusion matrix must be square");
    for (std::size_t p = 0; p < rows.size(); ++p) m.at(g, p) = rows[g][p];
  }
  return m;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

std::size_t ConfusionMatrix::correct() const {
  std::size_t t = 0;
  for (std::size_t j = 0; j < num_classes; ++j) t += at(j, j);
  return t;
}

ConfusionMatrix confusion(std::span<const ClassIndex> gold, std::span<const ClassIndex> predicted,
                          std::size_t num_classes) {
  if (gold.size() != predicted.size()) {
    throw InvalidArgument("gold and predicted label counts differ");
  }
  ConfusionMatrix m(num_classes);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] >= num_classes || predicted[i] >= num_classes) {
      throw InvalidArgument("label out of range at position " + std::to_string(i));
    }
    ++m.at(gold[i], predicted[i]);
  }
  return m;
}

MetricsReport metrics(const ConfusionMatrix& m) {
  const std::size_t total = m.total();
  if (total == 0) throw InvalidArgument("metrics of an empty confusion matrix");
  const std::size_t k = m.num_classes;
  MetricsReport r;
  r.per_class.resize(k);
  const double n = static_cast<double>(total);

  for (std::size_t j = 0; j < k; ++j) {
    std::size_t tp = m.at(j, j), gold = 0, pred = 0;
    for (std::size_t q = 0; q < k; ++q) {
      gold += m.at(j, q);
      pred += m.at(q, j);
    }
    const std::size_t fp = pred - tp;
    const std::size_t fn = gold - tp;
    ClassMetrics& c = r.per_class[j];
    c.support = gold;
    if (pred == 0) {
      c.precision_undefined = true;
    } else {
      c.precision = static_cast<double>(tp) / static_cast<double>(pred);
    }
    if (gold == 0) {
      c.recall_undefined = true;
    } else {
      c.recall = static_cast<double>(tp) / static_cast<double>(gold);
    }
    const std::size_t f1_den = 2 * tp + fp + fn;
    if (f1_den == 0) {
      c.f1_undefined = true;
    } else {
      c.f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(f1_den);
    }
    c.ova_accuracy = static_cast<double>(total - fp - fn) / n;
  }

  r.accuracy = static_cast<double>(m.correct()) / n;
  // Single-label: micro precision = micro recall = accuracy.
  r.micro_f1 = r.accuracy;
  for (const auto& c : r.per_class) {
    r.macro_f1 += c.f1;
    r.weighted_f1 += c.f1 * static_cast<double>(c.support);
  }
  r.macro_f1 /= static_cast<double>(k);
  r.weighted_f1 /= n;
  return r;
}

namespace {

std::string class_label(std::span<const std::string> names, std::size_t j) {
  return j < names.size() ? names[j] : "c" + std::to_string(j);
}

std::span<const std::string> names_of(const LabelSchema* schema) {
  if (!schema) return {};
  return schema->classes();
}

}  // namespace

std::string metrics_json(const MetricsReport& report, std::span<const std::string> names) {
  nlohmann::ordered_json j;
  j["accuracy"] = report.accuracy;
  j["macro_f1"] = report.macro_f1;
  j["micro_f1"] = report.micro_f1;
  j["weighted_f1"] = report.weighted_f1;
  auto& classes = j["per_class"];
  classes = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& m = report.per_class[c];
    nlohmann::ordered_json e;
    e["class"] = class_label(names, c);
    e["precision"] = m.precision;
    e["recall"] = m.recall;
    e["f1"] = m.f1;
    e["ova_accuracy"] = m.ova_accuracy;
    e["support"] = m.support;
    if (m.precision_undefined || m.recall_undefined || m.f1_undefined) {
      auto& u = e["undefined"];
      u = nlohmann::ordered_json::array();
      if (m.precision_undefined) u.push_back("precision");
      if (m.recall_undefined) u.push_back("recall");
      if (m.f1_undefined) u.push_back("f1");
    }
    classes.push_back(std::move(e));
  }
  return j.dump(2);
}

std::string metrics_table(const MetricsReport& report, std::span<const std::string> names) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << std::left << std::setw(20) << "class" << std::right << std::setw(10) << "precision"
      << std::setw(10) << "recall" << std::setw(10) << "f1" << std::setw(10) << "ova_acc"
      << std::setw(9) << "support" << '\n';
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& m = report.per_class[c];
    out << std::left << std::setw(20) << class_label(names, c) << std::right << std::setw(10)
        << m.precision << std::setw(10) << m.recall << std::setw(10) << m.f1 << std::setw(10)
        << m.ova_accuracy << std::setw(9) << m.support << '\n';
  }
  out << "accuracy    " << report.accuracy << '\n'
      << "macro-F1    " << report.macro_f1 << '\n'
      << "micro-F1    " << report.micro_f1 << '\n'
      << "weighted-F1 " << report.weighted_f1 << '\n';
  return out.str();
}

std::string metrics_json(const MetricsReport& report, const LabelSchema* schema) {
  return metrics_json(report, names_of(schema));
}

std::string metrics_table(const MetricsReport& report, const LabelSchema* schema) {
  return metrics_table(report, names_of(schema));
}

void InstabilityReport::summarize() {
  mean_accuracy = mean_macro_f1 = std_accuracy = std_macro_f1 = 0.0;
  if (runs.empty()) return;
  const double n = static_cast<double>(runs.size());
  // shifted by the first run so identical runs give an exact mean and zero std
  const double a0 = runs.front().accuracy, f0 = runs.front().macro_f1;
  for (const auto& r : runs) {
    mean_accuracy += r.accuracy - a0;
    mean_macro_f1 += r.macro_f1 - f0;
  }
  mean_accuracy = a0 + mean_accuracy / n;
  mean_macro_f1 = f0 + mean_macro_f1 / n;
  if (runs.size() < 2) return;
  for (const auto& r : runs) {
    std_accuracy += (r.accuracy - mean_accuracy) * (r.accuracy - mean_accuracy);
    std_macro_f1 += (r.macro_f1 - mean_macro_f1) * (r.macro_f1 - mean_macro_f1);
  }
  std_accuracy = std::sqrt(std_accuracy / (n - 1));
  std_macro_f1 = std::sqrt(std_macro_f1 / (n - 1));
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_instability_csv(std::ostream& out, const InstabilityReport& report) {
  out << "run,seed,accuracy,macro_f1\n";
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    const auto& r = report.runs[i];
    out << i << ',' << r.seed << ',' << fmt(r.accuracy) << ',' << fmt(r.macro_f1) << '\n';
  }
  out << "mean,," << fmt(report.mean_accuracy) << ',' << fmt(report.mean_macro_f1) << '\n';
  out << "std,," << fmt(report.std_accuracy) << ',' << fmt(report.std_macro_f1) << '\n';
}

void write_expert_loss_csv(std::ostream& out, const InstabilityReport& report,
                           const LabelSchema& schema) {
  out << "run,seed";
  for (std::size_t s = 0; s < 2 * schema.size(); ++s) out << ',' << expert_label(schema, s);
  out << ",meta\n";
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    const auto& r = report.runs[i];
    out << i << ',' << r.seed;
    for (double l : r.expert_best_losses) out << ',' << fmt(l);
    out << ',' << fmt(r.meta_best_loss) << '\n';
  }
}

}  // namespace citefusion
