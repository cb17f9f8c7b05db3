#pragma once

// Level-0 to level-1: z-vector assembly and the unsupervised voting
// aggregators (max, average, majority).
//
// Layout: for class j, slot 2j holds the domain expert's positive
// probability and slot 2j+1 the general expert's. All argmax operations
// break ties toward the lowest class index, then the domain slot.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "citefusion/corpus.hpp"
#include "citefusion/experts.hpp"

namespace citefusion {

struct ZVector {
  std::vector<double> values;

  ZVector() = default;
  explicit ZVector(std::vector<double> v) : values(std::move(v)) {}

  std::size_t num_classes() const { return values.size() / 2; }
  double domain(ClassIndex j) const { return values[2 * j]; }
  double general(ClassIndex j) const { return values[2 * j + 1]; }

  // Throws InvalidArgument unless the length is 2K and every entry is in [0,1].
  void validate(std::size_t num_classes) const;

  bool operator==(const ZVector&) const = default;
};

inline std::size_t slot_index(ClassIndex j, Variant variant) {
  return 2 * j + (variant == Variant::domain ? 0 : 1);
}

// Validated arrangement of the 2K experts of one ensemble.
class ExpertPanel {
 public:
  // Throws InvalidArgument on a missing or duplicated (class, variant) slot
  // and StateError on an untrained expert.
  ExpertPanel(std::span<const BinaryExpert> experts, std::size_t num_classes);

  std::size_t num_classes() const { return slots_.size() / 2; }
  const BinaryExpert& expert(std::size_t slot) const { return *slots_[slot]; }

  ZVector assemble(std::string_view text) const;

 private:
  std::vector<const BinaryExpert*> slots_;
};

ZVector assemble_z(std::span<const BinaryExpert> experts, std::size_t num_classes,
                   const FormattedInput& input);

// Voting primitives work on raw 2K slot scores so the weighted variants can
// reuse them with reweighted slots.
ClassIndex max_vote(std::span<const double> slots);
struct AverageVote {
  std::vector<double> consensus;  // length K
  ClassIndex label = 0;
};
AverageVote avg_vote(std::span<const double> slots);

struct VoteTally {
  std::vector<int> counts;  // length K, each in {0, 1, 2}
};
VoteTally tally_votes(std::span<const double> slots, double threshold);
// Unique top tally wins; otherwise average voting restricted to the tied set.
ClassIndex majority_vote(std::span<const double> slots, double threshold = 0.5);

inline ClassIndex max_vote(const ZVector& z) { return max_vote(z.values); }
inline AverageVote avg_vote(const ZVector& z) { return avg_vote(z.values); }
inline ClassIndex majority_vote(const ZVector& z, double threshold = 0.5) {
  return majority_vote(z.values, threshold);
}

// First index of the maximum; the lowest-index tie-break used throughout.
std::size_t argmax_first(std::span<const double> values);

// Cached level-0 outputs for one split.
struct ZSet {
  std::vector<ZVector> rows;
  std::vector<ClassIndex> labels;
  std::vector<std::string> class_names;  // from a CSV header; may be empty

  std::size_t num_classes() const { return rows.empty() ? 0 : rows.front().num_classes(); }
};

// Columnar CSV: header `<class>_domain,<class>_general,...,label`, one row
// per instance, probabilities printed with 17 significant digits, label as
// the class index. read_zset keeps the header's class names.
void write_zset(std::ostream& out, const ZSet& zset, const LabelSchema& schema);
void write_zset(std::ostream& out, const ZSet& zset);  // generic c<j>_ headers
ZSet read_zset(std::istream& in);

}  // namespace citefusion
