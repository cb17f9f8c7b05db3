#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "citefusion/errors.hpp"
#include "citefusion/explain.hpp"
#include "doctest.h"

using namespace citefusion;
using V = std::vector<double>;

namespace {

double sum(const V& v) {
  double s = 0;
  for (double x : v) s += x;
  return s;
}

AttributionMass signed_only(double s) {
  AttributionMass m;
  m.signed_mass = s;
  m.positive = std::max(s, 0.0);
  m.negative = std::max(-s, 0.0);
  return m;
}

}  // namespace

TEST_CASE("Shapley on a linear game") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t n : {1, 2, 6, 12}) {
    V w(n), z(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = u(rng);
      z[i] = u(rng);
      b[i] = u(rng);
    }
    auto f = [&](std::span<const double> x) {
      double s = 0.25;
      for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i];
      return s;
    };
    const ShapleyReport r = exact_shapley(f, z, b);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(r.phi[i] - w[i] * (z[i] - b[i])) < 1e-12);
    CHECK(r.efficiency_residual < 1e-9);
  }
}

TEST_CASE("Shapley axioms on a nonlinear game") {
  // f ignores x2, symmetric in x0 and x1, has an interaction term
  auto f = [](std::span<const double> x) { return x[0] * x[1] + x[0] + x[1] + std::exp(x[3]) * x[0]; };
  const V z{0.7, 0.7, 0.3, 0.9}, b{0.2, 0.2, 0.5, 0.1};
  const ShapleyReport r = exact_shapley(f, z, b);
  CHECK(r.phi[2] == 0.0);
  CHECK(r.efficiency_residual < 1e-12);
  CHECK(sum(r.phi) == doctest::Approx(f(z) - f(b)).epsilon(1e-12));
  CHECK(r.full_value == f(z));
  CHECK(r.baseline_value == f(b));

  auto g = [](std::span<const double> x) { return x[0] * x[1] + x[0] + x[1]; };
  const ShapleyReport s = exact_shapley(g, V{0.7, 0.7, 0.3}, V{0.2, 0.2, 0.5});
  CHECK(s.phi[0] == doctest::Approx(s.phi[1]).epsilon(1e-15));

  // linearity: phi(a f + g) = a phi(f) + phi(g)
  auto h = [&](std::span<const double> x) { return 2.5 * f(x) + x[2] * x[3]; };
  auto k = [](std::span<const double> x) { return x[2] * x[3]; };
  const ShapleyReport rh = exact_shapley(h, z, b), rk = exact_shapley(k, z, b);
  for (std::size_t i = 0; i < 4; ++i) CHECK(rh.phi[i] == doctest::Approx(2.5 * r.phi[i] + rk.phi[i]).epsilon(1e-12));

  CHECK_THROWS_AS(exact_shapley(f, V(17, 0.0), V(17, 0.0)), InvalidArgument);
  CHECK_THROWS_AS(exact_shapley(f, V{1, 2}, V{1}), InvalidArgument);
}

TEST_CASE("Shapley on an FFNN head") {
  const FfnnParams p = FfnnParams::initialize(6, 8, 3, 21);
  const FfnnClassifier head(p);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<ZVector> rows;
  for (int i = 0; i < 20; ++i) {
    V z(6);
    for (double& x : z) x = u(rng);
    rows.emplace_back(z);
  }
  const ZVector base = mean_baseline(rows);
  for (const auto& z : rows) {
    for (ClassIndex c = 0; c < 3; ++c) {
      const ShapleyReport r = exact_shapley(head, z, base, c);
      CHECK(r.efficiency_residual < 1e-9);
      CHECK(r.full_value == doctest::Approx(head.predict(z).probabilities[c]).epsilon(1e-15));
      CHECK(r.output_class == c);
    }
  }
  // head with zero first-layer weights into slot 4
  FfnnParams q = p;
  for (std::size_t h = 0; h < q.hidden; ++h) q.w1[h * 6 + 4] = 0.0;
  const ShapleyReport r = exact_shapley(FfnnClassifier(q), rows[0], base, 1);
  CHECK(r.phi[4] == 0.0);
  CHECK_THROWS_AS(exact_shapley(head, rows[0], base, 3), InvalidArgument);
}

TEST_CASE("baselines") {
  const std::vector<ZVector> rows{ZVector(V{0.0, 1.0}), ZVector(V{1.0, 0.0}), ZVector(V{0.5, 0.5})};
  CHECK(mean_baseline(rows).values == V{0.5, 0.5});
  CHECK(uniform_baseline(3).values == V(6, 0.5));
  CHECK_THROWS_AS(mean_baseline(std::vector<ZVector>{}), InvalidArgument);
}

TEST_CASE("attribution mass") {
  const std::vector<TokenAttribution> mixed{{"a", 1.0}, {"b", -2.0}};
  AttributionMass m = attribution_mass(mixed);
  CHECK(m.positive == 1.0);
  CHECK(m.negative == 2.0);
  CHECK(m.signed_mass == -1.0);
  m = attribution_mass(std::vector<TokenAttribution>{});
  CHECK(m.positive == 0.0);
  CHECK(m.negative == 0.0);
  CHECK(m.signed_mass == 0.0);
  m = attribution_mass(std::vector<TokenAttribution>{{"x", 0.3}, {"y", 0.7}});
  CHECK(m.signed_mass == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.signed_mass == m.positive);

  // signed mass matches w.x of a real expert
  Featurizer f(Variant::domain, 1 << 10);
  f.fit(std::vector<std::string>{"we use the method of [3]", "results agree with [4]"});
  BinaryExpert e(0, f);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  V w(1 << 10);
  for (double& x : w) x = u(rng);
  e.set_parameters(w, 0.4);
  const FormattedInput in{"METHODS We use the method of [3] as before", Setting::WS, false};
  CHECK_THROWS_AS(attribution_mass(e, in), StateError);
  e.mark_trained();
  const AttributionMass am = attribution_mass(e, in);
  CHECK(std::abs(am.signed_mass - (e.logit(in.text) - 0.4)) < 1e-12);
  CHECK(am.expert_class == 0);
  CHECK(am.expert_variant == Variant::domain);
}

TEST_CASE("pearson") {
  CHECK(*pearson(V{1, 2, 3}, V{2, 4, 6}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(*pearson(V{1, 2, 3}, V{3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK_FALSE(pearson(V{1, 1, 1}, V{1, 2, 3}).has_value());
  CHECK_FALSE(pearson(V{1}, V{2}).has_value());
}

TEST_CASE("mass statistics and CSV output") {
  const LabelSchema s = scicite_schema();
  std::vector<MassRecord> recs;
  const std::vector<V> signed_rows{{1, 2, 0.5, 0.5, -1, 3}, {2, 4, 0.5, 0.5, -2, 2}, {3, 6, 0.5, 0.5, -3, 1}};
  for (const auto& row : signed_rows) {
    MassRecord r;
    r.predicted_class = 0;
    for (double x : row) r.experts.push_back(signed_only(x));
    recs.push_back(r);
  }
  MassRecord lone;
  lone.predicted_class = 2;
  for (int e = 0; e < 6; ++e) lone.experts.push_back(signed_only(0.1));
  recs.push_back(lone);

  const MassStatistics st = mass_statistics(recs, 3);
  REQUIRE(st.groups.size() == 3);
  const GroupStatistics& g = st.groups[0];
  CHECK(g.count == 3);
  CHECK_FALSE(g.too_small);
  CHECK(g.experts[0].signed_mass.mean == doctest::Approx(2.0));
  CHECK(g.experts[0].signed_mass.std == doctest::Approx(1.0));
  CHECK(g.experts[2].signed_mass.std == 0.0);
  CHECK(g.experts[4].negative.mean == doctest::Approx(2.0));
  CHECK(*g.correlation[0][1] == doctest::Approx(1.0));
  CHECK(*g.correlation[0][5] == doctest::Approx(-1.0));
  CHECK_FALSE(g.correlation[0][2].has_value());
  CHECK_FALSE(g.correlation[2][2].has_value());
  CHECK(*g.correlation[1][1] == 1.0);
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = 0; b < 6; ++b) CHECK(g.correlation[a][b] == g.correlation[b][a]);
  }
  CHECK(st.groups[1].count == 0);
  CHECK(st.groups[1].too_small);
  CHECK(st.groups[2].too_small);

  std::ostringstream mass;
  write_mass_csv(mass, st, s);
  const std::string m = mass.str();
  CHECK(m.rfind("predicted_class,expert,count,pos_mean,pos_std,neg_mean,neg_std,signed_mean,signed_std\n", 0) == 0);
  CHECK(m.find("Method,Method-domain,3,2.000000,1.000000,0.000000,0.000000,2.000000,1.000000\n") != std::string::npos);
  CHECK(m.find("Result,ALL,1,NA,NA,NA,NA,NA,NA\n") != std::string::npos);

  std::ostringstream corr;
  write_correlation_csv(corr, g, s);
  const std::string c = corr.str();
  CHECK(c.rfind("expert,Method-domain,Method-general,Background-domain,", 0) == 0);
  CHECK(c.find("Method-domain,1.000000,1.000000,NA,NA,-1.000000,-1.000000\n") != std::string::npos);

  MassRecord bad;
  bad.experts.resize(2);
  recs.push_back(bad);
  CHECK_THROWS_AS(mass_statistics(recs, 3), InvalidArgument);
}
