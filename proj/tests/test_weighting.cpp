#include <algorithm>
#include <cmath>
#include <random>

#include "citefusion/errors.hpp"
#include "citefusion/weighting.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace citefusion;
using V = std::vector<double>;

namespace {

std::vector<ZVector> pairs(const std::vector<std::array<double, 2>>& xs) {
  std::vector<ZVector> out;
  for (const auto& x : xs) out.emplace_back(V{x[0], x[1]});
  return out;
}

ClassWeights weights_of(ClassIndex j, double d, double g) {
  ClassWeights w;
  w.class_index = j;
  w.weights = {d, g};
  return w;
}

}  // namespace

TEST_CASE("geometric weights examples") {
  const auto val = pairs({{1, 0}, {0, 1}});
  const std::vector<int> k{1, 0};
  const ClassWeights w = fit_geometric_weights(val, k, 0);
  CHECK(w.raw[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(w.raw[1]) < 1e-12);
  CHECK(w.weights[0] == doctest::Approx(0.7310585786).epsilon(1e-9));
  CHECK(w.weights[1] == doctest::Approx(0.2689414214).epsilon(1e-9));
  CHECK_FALSE(w.degenerate);

  // identical columns: rank-1 design, minimum-norm split
  const auto dup = pairs({{1, 1}, {0, 0}, {1, 1}, {0, 0}});
  const std::vector<int> kd{1, 0, 1, 0};
  const ClassWeights d = fit_geometric_weights(dup, kd, 0);
  CHECK(d.degenerate);
  CHECK(d.raw[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.raw[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.weights[0] == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(fit_geometric_weights(pairs({{1, 0}}), std::vector<int>{1}, 0), InvalidArgument);
  CHECK_THROWS_AS(fit_geometric_weights(val, std::vector<int>{1}, 0), InvalidArgument);
}

TEST_CASE("apply_weights") {
  const ZVector z(V{0.2, 0.4, 0.9, 0.1});
  const std::vector<ClassWeights> w{weights_of(0, 0.7311, 0.2689), weights_of(1, 0.5, 0.5)};
  const V dot = apply_weights(z, w);
  CHECK(dot[0] == doctest::Approx(0.25378).epsilon(1e-12));
  CHECK(std::round(dot[0] * 1e4) / 1e4 == doctest::Approx(0.2538).epsilon(1e-12));
  CHECK(dot[1] == doctest::Approx(0.5));

  const std::vector<ClassWeights> half{weights_of(0, 0.5, 0.5), weights_of(1, 0.5, 0.5)};
  CHECK(apply_weights(z, half) == avg_vote(z).consensus);
  CHECK(reweight_slots(z, half) == z.values);

  const std::vector<ClassWeights> domain_only{weights_of(0, 1, 0), weights_of(1, 1, 0)};
  CHECK(apply_weights(z, domain_only) == V{0.2, 0.9});

  CHECK_THROWS_AS(apply_weights(z, std::vector<ClassWeights>{weights_of(0, 0.5, 0.5)}), InvalidArgument);
  CHECK_THROWS_AS(apply_weights(z, std::vector<ClassWeights>{weights_of(1, 0.5, 0.5), weights_of(0, 0.5, 0.5)}),
                  InvalidArgument);
}

TEST_CASE("weighted voting matches the oracle on reweighted slots") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 3 + trial % 4;
    V z(2 * k);
    for (double& x : z) x = u(rng);
    std::vector<ClassWeights> w;
    std::vector<std::array<double, 2>> ww;
    for (std::size_t j = 0; j < k; ++j) {
      const double d = u(rng);
      w.push_back(weights_of(j, d, 1 - d));
      ww.push_back({d, 1 - d});
    }
    const V slots = oracle::reweight(z, ww);
    const ZVector zz(z);
    CHECK(weighted_max_vote(zz, w) == oracle::max_vote(slots));
    CHECK(weighted_avg_vote(zz, w) == oracle::avg_vote(slots));
    CHECK(weighted_majority_vote(zz, w, 0.5) == oracle::majority_vote(slots, 0.5));
    // class average of the reweighted slots is the weighted score
    const V dot = apply_weights(zz, w);
    const V cons = oracle::consensus(slots);
    for (std::size_t j = 0; j < k; ++j) CHECK(cons[j] == doctest::Approx(dot[j]).epsilon(1e-14));
  }
}

TEST_CASE("geometric fit is optimal and orthogonal") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0, 1), cand(-2, 2);
  for (int design = 0; design < 20; ++design) {
    const std::size_t n = 10 + rng() % 40;
    std::vector<std::array<double, 2>> x(n);
    V y(n);
    std::vector<int> k(n);
    for (std::size_t i = 0; i < n; ++i) {
      k[i] = u(rng) < 0.4 ? 1 : 0;
      x[i] = {std::clamp(0.6 * k[i] + 0.4 * u(rng), 0.0, 1.0), u(rng)};
      y[i] = k[i];
    }
    const ClassWeights w = fit_geometric_weights(pairs(x), k, 0);
    double g0 = 0, g1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = w.raw[0] * x[i][0] + w.raw[1] * x[i][1] - y[i];
      g0 += x[i][0] * r;
      g1 += x[i][1] * r;
    }
    CHECK(std::max(std::abs(g0), std::abs(g1)) < 1e-8);
    const double best = oracle::rss(x, y, w.raw[0], w.raw[1]);
    CHECK(w.residual_sum_of_squares == doctest::Approx(best).epsilon(1e-9));
    for (int c = 0; c < 2000; ++c) {
      CHECK(best <= oracle::rss(x, y, cand(rng), cand(rng)) + 1e-12);
    }
    CHECK(w.weights[0] + w.weights[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w.weights[0] > 0);
    CHECK(w.weights[1] > 0);
  }
}

TEST_CASE("StackingC examples") {
  // duplicated (0,0)->0, (1,1)->1: minimum-norm theta splits evenly
  const auto val = pairs({{0, 0}, {1, 1}, {0, 0}, {1, 1}});
  const StackingHead h = fit_stackingc_head(val, std::vector<int>{0, 1, 0, 1}, 0);
  CHECK(h.degenerate);
  CHECK(h.theta[0] + h.theta[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(h.theta[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(h.intercept) < 1e-12);

  const auto spread = pairs({{0.1, 0.7}, {0.4, 0.2}, {0.9, 0.5}, {0.3, 0.3}});
  const StackingHead c = fit_stackingc_head(spread, std::vector<int>{1, 1, 1, 1}, 0);
  CHECK(std::abs(c.theta[0]) < 1e-12);
  CHECK(std::abs(c.theta[1]) < 1e-12);
  CHECK(c.intercept == doctest::Approx(1.0).epsilon(1e-12));

  const V exact{0.5 * 0.1 + 0.5 * 0.7, 0.5 * 0.4 + 0.5 * 0.2, 0.5 * 0.9 + 0.5 * 0.5, 0.5 * 0.3 + 0.5 * 0.3};
  const StackingHead r = fit_stackingc_head(spread, std::span<const double>(exact), 0);
  CHECK(std::abs(r.theta[0] - 0.5) < 1e-9);
  CHECK(std::abs(r.theta[1] - 0.5) < 1e-9);
  CHECK(std::abs(r.intercept) < 1e-9);
  CHECK_FALSE(r.degenerate);

  CHECK_THROWS_AS(fit_stackingc_head(pairs({{0, 0}, {1, 1}}), std::vector<int>{0, 1}, 0), InvalidArgument);
}

TEST_CASE("StackingC exact recovery on random designs") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1), p(-2, 2);
  for (int t = 0; t < 50; ++t) {
    const double a = p(rng), b = p(rng), c = p(rng);
    std::vector<ZVector> z;
    V y;
    for (int i = 0; i < 30; ++i) {
      const double d = u(rng), g = u(rng);
      z.emplace_back(V{u(rng), u(rng), d, g});
      y.push_back(a * d + b * g + c);
    }
    const StackingHead h = fit_stackingc_head(z, std::span<const double>(y), 1);
    CHECK(std::abs(h.theta[0] - a) < 1e-9);
    CHECK(std::abs(h.theta[1] - b) < 1e-9);
    CHECK(std::abs(h.intercept - c) < 1e-9);
  }
}

TEST_CASE("softmax and StackingC prediction") {
  V p = softmax(V{0, 0, 0});
  for (double x : p) CHECK(x == doctest::Approx(1.0 / 3));
  p = softmax(V{std::log(2.0), 0, 0});
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-14));
  p = softmax(V{1000, 0});
  CHECK(p[0] == 1.0);
  CHECK(std::isfinite(p[1]));

  std::vector<StackingHead> heads(3);
  for (std::size_t j = 0; j < 3; ++j) {
    heads[j].class_index = j;
    heads[j].theta = {1, 0};
  }
  const ZVector z(V{0.2, 0.9, 0.7, 0.1, 0.2, 0.8});
  StackingPrediction s = stackingc_predict(z, heads);
  CHECK(s.logits == V{0.2, 0.7, 0.2});
  CHECK(s.label == 1);
  double sum = 0;
  for (double x : s.probabilities) sum += x;
  CHECK(std::abs(sum - 1.0) < 1e-12);

  for (auto& h : heads) h.intercept += 3.5;
  CHECK(stackingc_predict(z, heads).label == 1);

  for (auto& h : heads) h.theta = {0, 0};
  CHECK(stackingc_predict(z, heads).label == 0);
}

TEST_CASE("least squares solver") {
  // y = 2x exactly, one column
  const LeastSquaresFit f = solve_least_squares(V{1, 2, 3}, 1, V{2, 4, 6});
  CHECK(f.coefficients[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f.residual_sum_of_squares < 1e-20);
  const LeastSquaresFit zero = solve_least_squares(V{0, 0, 0, 0}, 2, V{1, 1});
  CHECK(zero.degenerate);
  CHECK(zero.coefficients == V{0, 0});
  CHECK_THROWS_AS(solve_least_squares(V{1, 2, 3}, 2, V{1, 1}), InvalidArgument);
}
