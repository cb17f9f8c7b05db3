#include "citefusion/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>

#include "citefusion/errors.hpp"

namespace citefusion {

ShapleyReport exact_shapley(const ValueFunction& value, std::span<const double> z,
                            std::span<const double> baseline) {
  const std::size_t n = z.size();
  if (baseline.size() != n) throw InvalidArgument("baseline and input widths differ");
  if (n == 0) throw InvalidArgument("no features to explain");
  if (n > kMaxShapleyFeatures) {
    throw InvalidArgument("exact Shapley enumeration limited to " +
                          std::to_string(kMaxShapleyFeatures) + " features, got " +
                          std::to_string(n));
  }

  const std::uint32_t full = (std::uint32_t{1} << n) - 1;
  std::vector<double> v(std::size_t{full} + 1);
  std::vector<double> x(n);
  for (std::uint32_t mask = 0; mask <= full; ++mask) {
    for (std::size_t f = 0; f < n; ++f) x[f] = (mask >> f) & 1u ? z[f] : baseline[f];
    v[mask] = value(x);
  }

  // weight[s] = s!(n-s-1)!/n! = 1 / (n * C(n-1, s)); binomials are exact in double for n <= 16.
  std::vector<double> weight(n);
  double binom = 1.0;
  for (std::size_t s = 0; s < n; ++s) {
    if (s > 0) binom = binom * static_cast<double>(n - s) / static_cast<double>(s);
    weight[s] = 1.0 / (static_cast<double>(n) * binom);
  }

  ShapleyReport r;
  r.baseline.assign(baseline.begin(), baseline.end());
  r.phi.assign(n, 0.0);
  for (std::size_t f = 0; f < n; ++f) {
    const std::uint32_t bit = std::uint32_t{1} << f;
    double acc = 0.0;
    for (std::uint32_t mask = 0; mask <= full; ++mask) {
      if (mask & bit) continue;
      acc += weight[static_cast<std::size_t>(__builtin_popcount(mask))] * (v[mask | bit] - v[mask]);
    }
    r.phi[f] = acc;
  }
  r.full_value = v[full];
  r.baseline_value = v[0];
  double sum = 0.0;
  for (double p : r.phi) sum += p;
  r.efficiency_residual = std::abs(sum - (r.full_value - r.baseline_value));
  return r;
}

ShapleyReport exact_shapley(const MetaClassifier& head, const ZVector& z, const ZVector& baseline,
                            ClassIndex output_class) {
  if (output_class >= head.num_classes()) throw InvalidArgument("output class out of range");
  if (z.values.size() != head.input_width()) throw InvalidArgument("z width does not match head");
  ShapleyReport r = exact_shapley(
      [&](std::span<const double> x) { return head.predict(x).probabilities[output_class]; },
      z.values, baseline.values);
  r.output_class = output_class;
  return r;
}

ZVector mean_baseline(std::span<const ZVector> rows) {
  if (rows.empty()) throw InvalidArgument("cannot average an empty z-vector set");
  std::vector<double> mean(rows.front().values.size(), 0.0);
  for (const auto& z : rows) {
    if (z.values.size() != mean.size()) throw InvalidArgument("z-vector widths differ");
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += z.values[i];
  }
  for (double& m : mean) m /= static_cast<double>(rows.size());
  return ZVector(std::move(mean));
}

ZVector uniform_baseline(std::size_t num_classes, double value) {
  return ZVector(std::vector<double>(2 * num_classes, value));
}

AttributionMass attribution_mass(std::span<const TokenAttribution> contributions) {
  AttributionMass m;
  for (const auto& t : contributions) {
    if (t.contribution > 0) m.positive += t.contribution;
    if (t.contribution < 0) m.negative -= t.contribution;
  }
  m.signed_mass = m.positive - m.negative;
  return m;
}

AttributionMass attribution_mass(const BinaryExpert& expert, const FormattedInput& input) {
  if (!expert.trained()) throw StateError("attribution mass of an untrained expert");
  const auto tokens = token_attributions(expert, input.text);
  AttributionMass m = attribution_mass(tokens);
  m.expert_class = expert.target_class();
  m.expert_variant = expert.variant();
  return m;
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) return std::nullopt;
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
  const double r = sab / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

namespace {

MomentPair moments(const std::vector<double>& xs) {
  MomentPair m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

}  // namespace

MassStatistics mass_statistics(std::span<const MassRecord> records, std::size_t num_classes) {
  const std::size_t experts = 2 * num_classes;
  MassStatistics stats;
  for (std::size_t c = 0; c < num_classes; ++c) {
    GroupStatistics g;
    g.predicted_class = c;
    std::vector<std::vector<double>> pos(experts), neg(experts), sgn(experts);
    for (const auto& rec : records) {
      if (rec.predicted_class != c) continue;
      if (rec.experts.size() != experts) throw InvalidArgument("mass record has wrong expert count");
      ++g.count;
      for (std::size_t e = 0; e < experts; ++e) {
        pos[e].push_back(rec.experts[e].positive);
        neg[e].push_back(rec.experts[e].negative);
        sgn[e].push_back(rec.experts[e].signed_mass);
      }
    }
    if (g.count < 2) {
      g.too_small = true;
      stats.groups.push_back(std::move(g));
      continue;
    }
    for (std::size_t e = 0; e < experts; ++e) {
      g.experts.push_back({moments(pos[e]), moments(neg[e]), moments(sgn[e])});
    }
    g.correlation.assign(experts, std::vector<std::optional<double>>(experts));
    for (std::size_t a = 0; a < experts; ++a) {
      for (std::size_t b = a; b < experts; ++b) {
        auto r = pearson(sgn[a], sgn[b]);
        if (a == b && r) r = 1.0;
        g.correlation[a][b] = r;
        g.correlation[b][a] = r;
      }
    }
    stats.groups.push_back(std::move(g));
  }
  return stats;
}

std::string expert_label(const LabelSchema& schema, std::size_t slot) {
  return schema.class_name(slot / 2) + (slot % 2 == 0 ? "-domain" : "-general");
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_mass_csv(std::ostream& out, const MassStatistics& stats, const LabelSchema& schema) {
  out << "predicted_class,expert,count,pos_mean,pos_std,neg_mean,neg_std,signed_mean,signed_std\n";
  for (const auto& g : stats.groups) {
    if (g.too_small) {
      out << schema.class_name(g.predicted_class) << ",ALL," << g.count
          << ",NA,NA,NA,NA,NA,NA\n";
      continue;
    }
    for (std::size_t e = 0; e < g.experts.size(); ++e) {
      const auto& s = g.experts[e];
      out << schema.class_name(g.predicted_class) << ',' << expert_label(schema, e) << ','
          << g.count << ',' << num(s.positive.mean) << ',' << num(s.positive.std) << ','
          << num(s.negative.mean) << ',' << num(s.negative.std) << ',' << num(s.signed_mass.mean)
          << ',' << num(s.signed_mass.std) << '\n';
    }
  }
}

void write_correlation_csv(std::ostream& out, const GroupStatistics& group,
                           const LabelSchema& schema) {
  const std::size_t n = group.correlation.size();
  out << "expert";
  for (std::size_t e = 0; e < n; ++e) out << ',' << expert_label(schema, e);
  out << '\n';
  for (std::size_t a = 0; a < n; ++a) {
    out << expert_label(schema, a);
    for (std::size_t b = 0; b < n; ++b) {
      out << ',' << (group.correlation[a][b] ? num(*group.correlation[a][b]) : "NA");
    }
    out << '\n';
  }
}

}  // namespace citefusion
