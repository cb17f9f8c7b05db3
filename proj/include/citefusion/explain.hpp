#pragma once

// Exact Shapley attributions of a level-1 head over its 2K expert features,
// per-expert attribution masses, and grouped mass statistics.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "citefusion/experts.hpp"
#include "citefusion/meta.hpp"

namespace citefusion {

inline constexpr std::size_t kMaxShapleyFeatures = 16;

struct ShapleyReport {
  std::string instance_id;
  ClassIndex output_class = 0;
  std::vector<double> baseline;
  std::vector<double> phi;
  double full_value = 0.0;      // f(z)
  double baseline_value = 0.0;  // f(baseline)
  double efficiency_residual = 0.0;  // |sum(phi) - (f(z) - f(baseline))|
};

using ValueFunction = std::function<double(std::span<const double>)>;

// phi_f = sum over S not containing f of |S|!(n-|S|-1)!/n! [v(S+f) - v(S)],
// v(S) = f(x) with x_i = z_i for i in S and baseline_i otherwise.
// Enumerates all 2^n coalitions once. Throws InvalidArgument when n exceeds
// kMaxShapleyFeatures or the shapes differ.
ShapleyReport exact_shapley(const ValueFunction& value, std::span<const double> z,
                            std::span<const double> baseline);

// Explains the head's probability for `output_class`.
ShapleyReport exact_shapley(const MetaClassifier& head, const ZVector& z, const ZVector& baseline,
                            ClassIndex output_class);

// Component-wise mean of a set of z-vectors (the default explanation baseline).
ZVector mean_baseline(std::span<const ZVector> rows);
ZVector uniform_baseline(std::size_t num_classes, double value = 0.5);

struct AttributionMass {
  std::string instance_id;
  ClassIndex expert_class = 0;
  Variant expert_variant = Variant::domain;
  double positive = 0.0;
  double negative = 0.0;  // magnitude
  double signed_mass = 0.0;
};

AttributionMass attribution_mass(std::span<const TokenAttribution> contributions);
AttributionMass attribution_mass(const BinaryExpert& expert, const FormattedInput& input);

// Per-instance masses of all 2K experts (slot order) plus the ensemble's
// predicted class.
struct MassRecord {
  ClassIndex predicted_class = 0;
  std::vector<AttributionMass> experts;
};

struct MomentPair {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
};

struct ExpertMassSummary {
  MomentPair positive;
  MomentPair negative;
  MomentPair signed_mass;
};

struct GroupStatistics {
  ClassIndex predicted_class = 0;
  std::size_t count = 0;
  bool too_small = false;  // fewer than 2 instances; statistics omitted
  std::vector<ExpertMassSummary> experts;
  // Pearson correlation of signed masses; nullopt where a column is constant.
  std::vector<std::vector<std::optional<double>>> correlation;
};

struct MassStatistics {
  std::vector<GroupStatistics> groups;  // one per class, in class order
};

MassStatistics mass_statistics(std::span<const MassRecord> records, std::size_t num_classes);

// Pearson correlation; nullopt when either input has zero variance.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

// CSV with one row per (predicted class, expert):
//   predicted_class,expert,count,pos_mean,pos_std,neg_mean,neg_std,signed_mean,signed_std
void write_mass_csv(std::ostream& out, const MassStatistics& stats, const LabelSchema& schema);
// Square CSV of the signed-mass correlations of one group; "NA" marks
// undefined entries.
void write_correlation_csv(std::ostream& out, const GroupStatistics& group,
                           const LabelSchema& schema);

std::string expert_label(const LabelSchema& schema, std::size_t slot);

}  // namespace citefusion
