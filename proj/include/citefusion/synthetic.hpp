#pragma once

// Seeded generator for SciCite-shaped toy corpora: class-specific cue words
// mixed into shared filler, bracketed markers and numbers, and section titles
// whose correlation with the label is tunable.

#include <array>
#include <cstdint>
#include <vector>

#include "citefusion/corpus.hpp"

namespace citefusion {

struct SyntheticOptions {
  std::size_t size = 2000;
  std::uint64_t seed = 1;
  std::vector<double> proportions{0.58, 0.29, 0.13};  // Method, Background, Result
  std::size_t cues_per_sentence = 2;
  double cue_noise = 0.1;         // chance a cue word is drawn from another class
  double title_signal = 0.85;     // chance the title comes from the label's own pool
  double missing_title = 0.0;     // chance the title is absent
  std::size_t min_filler = 6;
  std::size_t max_filler = 12;
  std::array<double, 3> split_fractions{0.7, 0.1, 0.2};  // train / val / test

  // Throws InvalidArgument when a field is out of range.
  void validate() const;
};

// Schema of the generated corpora: SciCite classes and CiTO mapping under the
// dataset name "synthetic".
LabelSchema synthetic_schema();

// Class counts follow `proportions` exactly (rounded, remainder to class 0);
// instances are shuffled and split by `split_fractions`.
Dataset generate_synthetic(const SyntheticOptions& options);

}  // namespace citefusion
