#pragma once

// Supervised non-neural level-1 strategies fitted on the validation split:
//
//  * geometric weights - per class, least squares without intercept from the
//    (domain, general) probability pair to the OVA label, then softmax over
//    the two coefficients;
//  * StackingC - per class, least squares with intercept; test-time logits
//    theta.z^j + b are softmaxed across classes.
//
// Both are solved in closed form from the normal equations. A singular
// normal matrix falls back to the Moore-Penrose pseudoinverse and the fit
// is flagged degenerate.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "citefusion/fusion.hpp"

namespace citefusion {

struct LeastSquaresFit {
  std::vector<double> coefficients;
  bool degenerate = false;
  double residual_sum_of_squares = 0.0;
};

// Minimum-norm solution of min ||X c - y||^2. `design` is row-major with
// `columns` entries per row.
LeastSquaresFit solve_least_squares(std::span<const double> design, std::size_t columns,
                                    std::span<const double> targets);

struct ClassWeights {
  ClassIndex class_index = 0;
  std::array<double, 2> raw{};      // unnormalized least-squares solution
  std::array<double, 2> weights{};  // softmax(raw): (domain, general)
  bool degenerate = false;
  double residual_sum_of_squares = 0.0;
};

// `ova_labels[i]` is 1 when validation row i belongs to class j.
ClassWeights fit_geometric_weights(std::span<const ZVector> val, std::span<const int> ova_labels,
                                   ClassIndex j);
// Real-valued targets, e.g. soft labels.
ClassWeights fit_geometric_weights(std::span<const ZVector> val, std::span<const double> targets,
                                   ClassIndex j);
std::vector<ClassWeights> fit_geometric_weights(const ZSet& val);

// Weighted class scores z_dot^j = w_domain * z[2j] + w_general * z[2j+1].
std::vector<double> apply_weights(const ZVector& z, std::span<const ClassWeights> weights);

// Reweighted per-model slot scores |A| * w_a * rho_a (|A| = 2). The class
// average of these slots equals apply_weights(), so running the voting rules
// on them yields W-Max / W-Avg / W-Maj, and w = (0.5, 0.5) reproduces the
// unweighted rules exactly.
std::vector<double> reweight_slots(const ZVector& z, std::span<const ClassWeights> weights);

ClassIndex weighted_max_vote(const ZVector& z, std::span<const ClassWeights> weights);
ClassIndex weighted_avg_vote(const ZVector& z, std::span<const ClassWeights> weights);
ClassIndex weighted_majority_vote(const ZVector& z, std::span<const ClassWeights> weights,
                                  double threshold = 0.5);

struct StackingHead {
  ClassIndex class_index = 0;
  std::array<double, 2> theta{};
  double intercept = 0.0;
  bool degenerate = false;
  double residual_sum_of_squares = 0.0;
};

// Ordinary least squares with an unpenalized intercept: the intercept is
// recovered from the means after a minimum-norm fit of the centered problem.
StackingHead fit_stackingc_head(std::span<const ZVector> val, std::span<const int> ova_labels,
                                ClassIndex j);
StackingHead fit_stackingc_head(std::span<const ZVector> val, std::span<const double> targets,
                                ClassIndex j);
std::vector<StackingHead> fit_stackingc(const ZSet& val);

struct StackingPrediction {
  std::vector<double> logits;
  std::vector<double> probabilities;
  ClassIndex label = 0;
};
StackingPrediction stackingc_predict(const ZVector& z, std::span<const StackingHead> heads);

// Stable softmax shared by every head that turns logits into probabilities.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace citefusion
