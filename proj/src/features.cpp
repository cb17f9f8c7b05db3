#include "citefusion/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "citefusion/errors.hpp"

namespace citefusion {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

bool is_marker_byte(unsigned char c) {
  return std::isdigit(c) != 0 || c == ',' || c == '-' || c == ' ' || c == ';';
}

// Length of a bracketed reference marker ("[12]", "[6,11,16]", "[9- 18]")
// starting at text[pos], or 0 when text[pos] does not open one.
std::size_t marker_length(std::string_view text, std::size_t pos) {
  if (text[pos] != '[') return 0;
  std::size_t end = pos + 1;
  bool digit = false;
  while (end < text.size() && text[end] != ']') {
    const auto c = static_cast<unsigned char>(text[end]);
    // en dash (E2 80 93) shows up in extracted reference ranges
    if (c == 0xE2 && end + 2 < text.size() && static_cast<unsigned char>(text[end + 1]) == 0x80 &&
        static_cast<unsigned char>(text[end + 2]) == 0x93) {
      end += 3;
      continue;
    }
    if (!is_marker_byte(c)) return 0;
    digit = digit || std::isdigit(c) != 0;
    ++end;
  }
  if (end >= text.size() || !digit) return 0;
  return end - pos + 1;
}

}  // namespace

std::string_view to_string(Variant variant) {
  return variant == Variant::domain ? "domain" : "general";
}

Variant parse_variant(std::string_view text) {
  if (text == "domain") return Variant::domain;
  if (text == "general") return Variant::general;
  throw InvalidArgument("unknown expert variant '" + std::string(text) + "'");
}

double SparseVector::dot(std::span<const double> dense) const {
  double sum = 0.0;
  for (const auto& [index, value] : entries) sum += dense[index] * value;
  return sum;
}

std::vector<std::string> tokenize(std::string_view text, Variant variant) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (const std::size_t len = marker_length(text, pos); len > 0) {
      if (variant == Variant::domain) {
        std::string marker;
        for (std::size_t k = pos; k < pos + len; ++k) {
          if (text[k] != ' ') marker.push_back(text[k]);
        }
        tokens.push_back(std::move(marker));
      }
      pos += len;
      continue;
    }
    const auto c = static_cast<unsigned char>(text[pos]);
    if (!is_word_byte(c)) {
      ++pos;
      continue;
    }
    std::size_t end = pos;
    while (end < text.size() && is_word_byte(static_cast<unsigned char>(text[end]))) ++end;
    std::string word(text.substr(pos, end - pos));
    if (variant == Variant::general) {
      std::string cleaned;
      cleaned.reserve(word.size());
      for (char ch : word) {
        const auto u = static_cast<unsigned char>(ch);
        if (std::isdigit(u)) continue;
        cleaned.push_back(static_cast<char>(std::tolower(u)));
      }
      word = std::move(cleaned);
    }
    if (!word.empty()) tokens.push_back(std::move(word));
    pos = end;
  }
  return tokens;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

Featurizer::Featurizer(Variant variant, std::size_t dimension)
    : variant_(variant), dimension_(dimension) {
  if (dimension == 0 || dimension > (std::size_t{1} << 31)) {
    throw InvalidArgument("feature dimension must be in [1, 2^31]");
  }
}

std::uint32_t Featurizer::unigram_index(std::string_view token) const {
  return static_cast<std::uint32_t>(fnv1a(token) % dimension_);
}

std::uint32_t Featurizer::bigram_index(std::string_view left, std::string_view right) const {
  std::string key;
  key.reserve(left.size() + right.size() + 1);
  key.append(left);
  key.push_back('\x1f');
  key.append(right);
  return static_cast<std::uint32_t>(fnv1a(key) % dimension_);
}

double Featurizer::feature_weight(std::uint32_t index) const {
  if (variant_ == Variant::general) return 1.0;
  auto it = std::lower_bound(idf_.begin(), idf_.end(), index,
                             [](const auto& e, std::uint32_t i) { return e.first < i; });
  if (it != idf_.end() && it->first == index) return it->second;
  return default_idf_;
}

void Featurizer::fit(std::span<const std::string> corpus) {
  fitted_ = true;
  idf_.clear();
  if (variant_ == Variant::general) return;

  std::map<std::uint32_t, std::size_t> df;
  for (const auto& doc : corpus) {
    const auto tokens = tokenize(doc, variant_);
    std::set<std::uint32_t> seen;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      seen.insert(unigram_index(tokens[i]));
      if (i + 1 < tokens.size()) seen.insert(bigram_index(tokens[i], tokens[i + 1]));
    }
    for (auto idx : seen) ++df[idx];
  }
  // Smoothed idf: ln((1 + N) / (1 + df)) + 1.
  const double n = static_cast<double>(corpus.size());
  default_idf_ = std::log(1.0 + n) + 1.0;
  idf_.reserve(df.size());
  for (const auto& [idx, count] : df) {
    idf_.emplace_back(idx, std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
}

SparseVector Featurizer::featurize(std::string_view text) const {
  const auto tokens = tokenize(text, variant_);
  std::map<std::uint32_t, double> acc;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto u = unigram_index(tokens[i]);
    acc[u] += feature_weight(u);
    if (i + 1 < tokens.size()) {
      const auto b = bigram_index(tokens[i], tokens[i + 1]);
      acc[b] += feature_weight(b);
    }
  }
  SparseVector out;
  out.entries.reserve(acc.size());
  for (const auto& [idx, value] : acc) {
    if (value != 0.0) out.entries.emplace_back(idx, value);
  }
  return out;
}

Featurizer Featurizer::restore(Variant variant, std::size_t dimension,
                               std::vector<std::pair<std::uint32_t, double>> idf,
                               double default_idf) {
  Featurizer f(variant, dimension);
  std::sort(idf.begin(), idf.end());
  f.idf_ = std::move(idf);
  f.default_idf_ = default_idf;
  f.fitted_ = true;
  return f;
}

}  // namespace citefusion
