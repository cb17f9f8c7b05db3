#pragma once

// Hand-built ensemble bundles with known expert outputs and meta
// probabilities: every expert has zero weights and a fixed bias, the meta
// head has zero weights and output biases log(p).

#include <cmath>
#include <string>
#include <vector>

#include "citefusion/explain.hpp"
#include "citefusion/pipeline.hpp"

namespace fixtures {

inline citefusion::EnsembleBundle constant_bundle(citefusion::Setting setting,
                                                  const std::vector<double>& probabilities,
                                                  double rho1 = 0.5) {
  using namespace citefusion;
  EnsembleBundle b;
  b.schema = scicite_schema();
  b.setting = setting;
  b.seed = 1;
  const std::size_t k = b.schema.size();
  for (std::size_t s = 0; s < 2 * k; ++s) {
    Featurizer f(s % 2 ? Variant::general : Variant::domain, 64);
    f.fit(std::vector<std::string>{"fixture text"});
    BinaryExpert e(s / 2, f);
    e.set_parameters(std::vector<double>(64, 0.0), std::log(rho1 / (1 - rho1)));
    e.mark_trained();
    b.experts.push_back(e);
  }
  b.meta = FfnnParams::zeros(2 * k, 4, k);
  for (std::size_t j = 0; j < k; ++j) b.meta.b2[j] = std::log(probabilities[j]);
  b.baseline = uniform_baseline(k);
  return b;
}

}  // namespace fixtures
