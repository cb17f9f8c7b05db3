#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "citefusion/corpus.hpp"

namespace citefusion {

// rows = gold, columns = predicted
struct ConfusionMatrix {
  std::size_t num_classes = 0;
  std::vector<std::size_t> counts;  // row-major

  explicit ConfusionMatrix(std::size_t k = 0) : num_classes(k), counts(k * k, 0) {}
  static ConfusionMatrix from_rows(const std::vector<std::vector<std::size_t>>& rows);

  std::size_t& at(ClassIndex gold, ClassIndex predicted) {
    return counts[gold * num_classes + predicted];
  }
  std::size_t at(ClassIndex gold, ClassIndex predicted) const {
    return counts[gold * num_classes + predicted];
  }
  std::size_t total() const;
  std::size_t correct() const;
  std::size_t misclassified() const { return total() - correct(); }
};

// Throws InvalidArgument on a length mismatch or a label >= num_classes.
ConfusionMatrix confusion(std::span<const ClassIndex> gold, std::span<const ClassIndex> predicted,
                          std::size_t num_classes);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ova_accuracy = 0.0;  // (TP + TN) / total
  std::size_t support = 0;    // gold count
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct MetricsReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  double weighted_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
};

// Zero denominators yield 0 with the matching *_undefined flag set. Throws
// InvalidArgument on an empty matrix.
MetricsReport metrics(const ConfusionMatrix& matrix);

std::string metrics_json(const MetricsReport& report, const LabelSchema* schema = nullptr);
std::string metrics_table(const MetricsReport& report, const LabelSchema* schema = nullptr);
// Names beyond the given list fall back to c<j>.
std::string metrics_json(const MetricsReport& report, std::span<const std::string> class_names);
std::string metrics_table(const MetricsReport& report, std::span<const std::string> class_names);

struct RunRecord {
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> expert_best_losses;  // slot order
  double meta_best_loss = 0.0;
};

struct InstabilityReport {
  std::vector<RunRecord> runs;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_macro_f1 = 0.0;
  double std_macro_f1 = 0.0;
  bool partial = false;  // a run failed; `runs` holds the completed ones
  std::string failure;

  // Recomputes the means and sample standard deviations from `runs`.
  void summarize();
};

// run,seed,accuracy,macro_f1 rows followed by mean and std rows.
void write_instability_csv(std::ostream& out, const InstabilityReport& report);
// run,seed,<expert...>,meta rows of best validation losses.
void write_expert_loss_csv(std::ostream& out, const InstabilityReport& report,
                           const LabelSchema& schema);

}  // namespace citefusion
