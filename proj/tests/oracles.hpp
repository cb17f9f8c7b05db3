#pragma once

// Brute-force reference implementations used as test oracles. Written
// without the library's voting helpers: candidates are collected and
// ranked by explicit comparison keys.

#include <algorithm>
#include <array>
#include <cstddef>
#include <tuple>
#include <vector>

namespace oracle {

// Max voting: rank (value desc, class asc, variant asc) over all slots.
inline std::size_t max_vote(const std::vector<double>& z) {
  std::vector<std::tuple<double, long, long>> keys;
  for (std::size_t s = 0; s < z.size(); ++s) {
    keys.emplace_back(-z[s], static_cast<long>(s / 2), static_cast<long>(s % 2));
  }
  return static_cast<std::size_t>(std::get<1>(*std::min_element(keys.begin(), keys.end())));
}

inline std::vector<double> consensus(const std::vector<double>& z) {
  std::vector<double> c;
  for (std::size_t j = 0; j + 1 < z.size(); j += 2) c.push_back((z[j] + z[j + 1]) / 2.0);
  return c;
}

// Highest score among `candidates`, lowest class index on ties.
inline std::size_t best_of(const std::vector<double>& score, const std::vector<std::size_t>& candidates) {
  std::vector<std::pair<double, std::size_t>> keys;
  for (std::size_t j : candidates) keys.emplace_back(-score[j], j);
  return std::min_element(keys.begin(), keys.end())->second;
}

inline std::size_t avg_vote(const std::vector<double>& z) {
  const auto c = consensus(z);
  std::vector<std::size_t> all(c.size());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
  return best_of(c, all);
}

inline std::size_t majority_vote(const std::vector<double>& z, double gamma) {
  const std::size_t k = z.size() / 2;
  std::vector<int> tally(k, 0);
  for (std::size_t j = 0; j < k; ++j) {
    tally[j] = (z[2 * j] >= gamma ? 1 : 0) + (z[2 * j + 1] >= gamma ? 1 : 0);
  }
  int top = -1;
  for (int t : tally) top = std::max(top, t);
  std::vector<std::size_t> tied;
  for (std::size_t j = 0; j < k; ++j) {
    if (tally[j] == top) tied.push_back(j);
  }
  if (tied.size() == 1) return tied[0];
  return best_of(consensus(z), tied);
}

// Weighted rules: each slot becomes |A| * w_a * rho_a, then the plain rules run.
inline std::vector<double> reweight(const std::vector<double>& z,
                                    const std::vector<std::array<double, 2>>& w) {
  std::vector<double> out(z.size());
  for (std::size_t s = 0; s < z.size(); ++s) out[s] = 2.0 * w[s / 2][s % 2] * z[s];
  return out;
}

// Residual sum of squares of a no-intercept 2-column fit.
inline double rss(const std::vector<std::array<double, 2>>& x, const std::vector<double>& y,
                  double a, double b) {
  double r = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = a * x[i][0] + b * x[i][1] - y[i];
    r += e * e;
  }
  return r;
}

}  // namespace oracle
