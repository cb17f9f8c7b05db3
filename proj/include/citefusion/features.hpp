#pragma once

// Hashed unigram+bigram featurizers used by the reference level-0 experts.
//
// Two variants give the expert pair its heterogeneity:
//   domain  - case preserved, bracketed reference markers ("[12]") and
//             numeric tokens kept, idf-weighted values;
//   general - lowercased, bracketed markers and digits stripped, raw counts.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace citefusion {

enum class Variant { domain, general };

std::string_view to_string(Variant variant);
Variant parse_variant(std::string_view text);

inline constexpr std::size_t kDefaultFeatureDimension = std::size_t{1} << 15;

// Sorted by index, no duplicate indices, no explicit zeros.
struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  double dot(std::span<const double> dense) const;
  bool operator==(const SparseVector&) const = default;
};

std::vector<std::string> tokenize(std::string_view text, Variant variant);

std::uint64_t fnv1a(std::string_view bytes);

class Featurizer {
 public:
  Featurizer() = default;
  Featurizer(Variant variant, std::size_t dimension);

  Variant variant() const { return variant_; }
  std::size_t dimension() const { return dimension_; }
  bool fitted() const { return fitted_; }

  // Freezes document frequencies for the domain variant; a no-op beyond
  // marking the featurizer fitted for the general variant.
  void fit(std::span<const std::string> corpus);

  std::uint32_t unigram_index(std::string_view token) const;
  std::uint32_t bigram_index(std::string_view left, std::string_view right) const;
  // Value contributed by one occurrence of feature `index`.
  double feature_weight(std::uint32_t index) const;

  SparseVector featurize(std::string_view text) const;

  // Serialization hooks. idf is sparse: features never seen while fitting
  // take `default_idf`.
  const std::vector<std::pair<std::uint32_t, double>>& idf_entries() const { return idf_; }
  double default_idf() const { return default_idf_; }
  static Featurizer restore(Variant variant, std::size_t dimension,
                            std::vector<std::pair<std::uint32_t, double>> idf,
                            double default_idf);

  bool operator==(const Featurizer&) const = default;

 private:
  Variant variant_ = Variant::general;
  std::size_t dimension_ = kDefaultFeatureDimension;
  bool fitted_ = false;
  std::vector<std::pair<std::uint32_t, double>> idf_;
  double default_idf_ = 1.0;
};

}  // namespace citefusion
