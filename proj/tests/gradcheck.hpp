#pragma once

// Central finite-difference check of the FFNN cross-entropy gradient.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "citefusion/meta.hpp"

namespace gradcheck {

// Denominator floor for relative errors of near-zero gradient entries.
inline constexpr double kFloor = 1e-7;
inline constexpr double kStep = 1e-5;
// Minimum distance of every hidden pre-activation from the ReLU kink. Central
// differences straddling the kink measure a one-sided mix, not the gradient.
inline constexpr double kKinkMargin = 1e-3;

inline double min_preactivation(const citefusion::FfnnParams& p, const std::vector<double>& z) {
  double m = 1e300;
  for (std::size_t h = 0; h < p.hidden; ++h) {
    double a = p.b1[h];
    for (std::size_t c = 0; c < p.input; ++c) a += p.w1[h * p.input + c] * z[c];
    m = std::min(m, std::abs(a));
  }
  return m;
}

struct Draw {
  citefusion::FfnnParams params;
  std::vector<citefusion::ZVector> inputs;
  std::vector<citefusion::ClassIndex> labels;
};

inline Draw random_draw(std::uint64_t seed, std::size_t k = 3, std::size_t hidden = 8,
                        std::size_t n = 6) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1), w(-1, 1);
  Draw d;
  d.params = citefusion::FfnnParams::initialize(2 * k, hidden, k, seed);
  // nonzero biases so the bias gradients are exercised off the origin
  for (double& b : d.params.b1) b = 0.3 * w(rng);
  for (double& b : d.params.b2) b = 0.3 * w(rng);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> z(2 * k);
    do {
      for (double& x : z) x = u(rng);
    } while (min_preactivation(d.params, z) < kKinkMargin);
    d.inputs.emplace_back(std::move(z));
    d.labels.push_back(rng() % k);
  }
  return d;
}

// Max relative error |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline double max_relative_error(const Draw& d) {
  std::vector<std::size_t> batch(d.inputs.size());
  std::iota(batch.begin(), batch.end(), std::size_t{0});
  const auto g = citefusion::ffnn_gradients(d.params, d.inputs, d.labels, batch);
  citefusion::FfnnParams p = d.params;
  double worst = 0;
  for (std::size_t i = 0; i < p.parameter_count(); ++i) {
    const double orig = p.parameter(i);
    p.parameter(i) = orig + kStep;
    const double up = citefusion::ffnn_loss(p, d.inputs, d.labels);
    p.parameter(i) = orig - kStep;
    const double down = citefusion::ffnn_loss(p, d.inputs, d.labels);
    p.parameter(i) = orig;
    const double numeric = (up - down) / (2 * kStep);
    const double a = g.values[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), kFloor});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace gradcheck
