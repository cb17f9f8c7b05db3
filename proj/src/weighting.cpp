#include "citefusion/weighting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "citefusion/errors.hpp"

namespace citefusion {

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - top);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

LeastSquaresFit solve_least_squares(std::span<const double> design, std::size_t columns,
                                    std::span<const double> targets) {
  if (columns == 0 || design.size() != columns * targets.size()) {
    throw InvalidArgument("design matrix shape does not match targets");
  }
  const auto rows = static_cast<Eigen::Index>(targets.size());
  const auto cols = static_cast<Eigen::Index>(columns);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      design.data(), rows, cols);
  Eigen::Map<const Eigen::VectorXd> y(targets.data(), rows);

  const Eigen::MatrixXd normal = x.transpose() * x;
  const Eigen::VectorXd rhs = x.transpose() * y;

  // Pseudoinverse through the eigendecomposition of the symmetric normal
  // matrix; identical to the direct solve when every eigenvalue survives.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double largest = lambda.cwiseAbs().maxCoeff();
  const double tol = std::max(largest, 1.0) * static_cast<double>(columns) * 1e-12;

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(cols);
  LeastSquaresFit fit;
  for (Eigen::Index k = 0; k < cols; ++k) {
    if (lambda(k) > tol) {
      const Eigen::VectorXd v = eig.eigenvectors().col(k);
      coef += v * (v.dot(rhs) / lambda(k));
    } else {
      fit.degenerate = true;
    }
  }
  // One refinement pass against the normal equations tightens the residual
  // orthogonality when the matrix is well conditioned.
  if (!fit.degenerate) {
    const Eigen::VectorXd correction = normal.ldlt().solve(rhs - normal * coef);
    if (correction.allFinite()) coef += correction;
  }

  fit.coefficients.assign(coef.data(), coef.data() + cols);
  fit.residual_sum_of_squares = (x * coef - y).squaredNorm();
  return fit;
}

namespace {

void check_fit_inputs(std::span<const ZVector> val, std::span<const double> labels, ClassIndex j,
                      std::size_t minimum) {
  if (val.size() != labels.size()) throw InvalidArgument("z rows/labels size mismatch");
  if (val.size() < minimum) {
    throw InvalidArgument("need at least " + std::to_string(minimum) + " validation instances");
  }
  for (const auto& z : val) {
    if (2 * j + 1 >= z.values.size()) throw InvalidArgument("class index outside z-vector");
  }
}

std::vector<double> as_targets(std::span<const int> labels) {
  return std::vector<double>(labels.begin(), labels.end());
}

std::vector<double> ova_column(const ZSet& zset, ClassIndex j) {
  std::vector<double> out(zset.labels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = zset.labels[i] == j ? 1 : 0;
  return out;
}

void check_classes(std::span<const ClassWeights> weights, std::size_t k) {
  if (weights.size() != k) throw InvalidArgument("need one set of class weights per class");
  for (std::size_t j = 0; j < k; ++j) {
    if (weights[j].class_index != j) throw InvalidArgument("class weights out of order");
  }
}

}  // namespace

ClassWeights fit_geometric_weights(std::span<const ZVector> val, std::span<const int> ova_labels,
                                   ClassIndex j) {
  return fit_geometric_weights(val, std::span<const double>(as_targets(ova_labels)), j);
}

ClassWeights fit_geometric_weights(std::span<const ZVector> val, std::span<const double> ova_labels,
                                   ClassIndex j) {
  check_fit_inputs(val, ova_labels, j, 2);
  std::vector<double> design;
  std::vector<double> y;
  design.reserve(2 * val.size());
  for (std::size_t i = 0; i < val.size(); ++i) {
    design.push_back(val[i].domain(j));
    design.push_back(val[i].general(j));
    y.push_back(ova_labels[i]);
  }
  const LeastSquaresFit fit = solve_least_squares(design, 2, y);
  ClassWeights w;
  w.class_index = j;
  w.raw = {fit.coefficients[0], fit.coefficients[1]};
  const auto sm = softmax(w.raw);
  w.weights = {sm[0], sm[1]};
  w.degenerate = fit.degenerate;
  w.residual_sum_of_squares = fit.residual_sum_of_squares;
  return w;
}

std::vector<ClassWeights> fit_geometric_weights(const ZSet& val) {
  std::vector<ClassWeights> out;
  for (std::size_t j = 0; j < val.num_classes(); ++j) {
    out.push_back(fit_geometric_weights(val.rows, std::span<const double>(ova_column(val, j)), j));
  }
  return out;
}

std::vector<double> apply_weights(const ZVector& z, std::span<const ClassWeights> weights) {
  const std::size_t k = z.num_classes();
  check_classes(weights, k);
  std::vector<double> out(k);
  for (std::size_t j = 0; j < k; ++j) {
    out[j] = weights[j].weights[0] * z.domain(j) + weights[j].weights[1] * z.general(j);
  }
  return out;
}

std::vector<double> reweight_slots(const ZVector& z, std::span<const ClassWeights> weights) {
  const std::size_t k = z.num_classes();
  check_classes(weights, k);
  std::vector<double> out(2 * k);
  for (std::size_t j = 0; j < k; ++j) {
    out[2 * j] = 2.0 * weights[j].weights[0] * z.domain(j);
    out[2 * j + 1] = 2.0 * weights[j].weights[1] * z.general(j);
  }
  return out;
}

ClassIndex weighted_max_vote(const ZVector& z, std::span<const ClassWeights> weights) {
  return max_vote(reweight_slots(z, weights));
}

ClassIndex weighted_avg_vote(const ZVector& z, std::span<const ClassWeights> weights) {
  return avg_vote(reweight_slots(z, weights)).label;
}

ClassIndex weighted_majority_vote(const ZVector& z, std::span<const ClassWeights> weights,
                                  double threshold) {
  return majority_vote(reweight_slots(z, weights), threshold);
}

StackingHead fit_stackingc_head(std::span<const ZVector> val, std::span<const int> ova_labels,
                                ClassIndex j) {
  return fit_stackingc_head(val, std::span<const double>(as_targets(ova_labels)), j);
}

StackingHead fit_stackingc_head(std::span<const ZVector> val, std::span<const double> ova_labels,
                                ClassIndex j) {
  check_fit_inputs(val, ova_labels, j, 3);
  const double n = static_cast<double>(val.size());
  double mean_d = 0.0, mean_g = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < val.size(); ++i) {
    mean_d += val[i].domain(j);
    mean_g += val[i].general(j);
    mean_y += ova_labels[i];
  }
  mean_d /= n;
  mean_g /= n;
  mean_y /= n;

  std::vector<double> design;
  std::vector<double> y;
  design.reserve(2 * val.size());
  for (std::size_t i = 0; i < val.size(); ++i) {
    design.push_back(val[i].domain(j) - mean_d);
    design.push_back(val[i].general(j) - mean_g);
    y.push_back(ova_labels[i] - mean_y);
  }
  const LeastSquaresFit fit = solve_least_squares(design, 2, y);

  StackingHead head;
  head.class_index = j;
  head.theta = {fit.coefficients[0], fit.coefficients[1]};
  head.intercept = mean_y - head.theta[0] * mean_d - head.theta[1] * mean_g;
  head.degenerate = fit.degenerate;
  head.residual_sum_of_squares = fit.residual_sum_of_squares;
  if (!std::isfinite(head.theta[0]) || !std::isfinite(head.theta[1]) ||
      !std::isfinite(head.intercept)) {
    throw Error("StackingC fit produced non-finite coefficients");
  }
  return head;
}

std::vector<StackingHead> fit_stackingc(const ZSet& val) {
  std::vector<StackingHead> out;
  for (std::size_t j = 0; j < val.num_classes(); ++j) {
    out.push_back(fit_stackingc_head(val.rows, std::span<const double>(ova_column(val, j)), j));
  }
  return out;
}

StackingPrediction stackingc_predict(const ZVector& z, std::span<const StackingHead> heads) {
  const std::size_t k = z.num_classes();
  if (heads.size() != k) throw InvalidArgument("need one StackingC head per class");
  StackingPrediction out;
  out.logits.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    if (heads[j].class_index != j) throw InvalidArgument("StackingC heads out of order");
    out.logits[j] = heads[j].theta[0] * z.domain(j) + heads[j].theta[1] * z.general(j) +
                    heads[j].intercept;
  }
  out.probabilities = softmax(out.logits);
  out.label = argmax_first(out.probabilities);
  return out;
}

}  // namespace citefusion
