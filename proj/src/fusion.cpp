#include "citefusion/fusion.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "citefusion/errors.hpp"

namespace citefusion {

void ZVector::validate(std::size_t k) const {
  if (values.size() != 2 * k) {
    throw InvalidArgument("z-vector has " + std::to_string(values.size()) +
                          " entries, expected " + std::to_string(2 * k));
  }
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("z-vector entry outside [0,1]");
  }
}

ExpertPanel::ExpertPanel(std::span<const BinaryExpert> experts, std::size_t num_classes)
    : slots_(2 * num_classes, nullptr) {
  for (const auto& e : experts) {
    if (e.target_class() >= num_classes) {
      throw InvalidArgument("expert targets class " + std::to_string(e.target_class()) +
                            " outside the schema");
    }
    const std::size_t slot = slot_index(e.target_class(), e.variant());
    if (slots_[slot] != nullptr) {
      throw InvalidArgument("duplicated expert for class " + std::to_string(e.target_class()) +
                            " (" + std::string(to_string(e.variant())) + ")");
    }
    if (!e.trained()) {
      throw StateError("expert for class " + std::to_string(e.target_class()) + " (" +
                       std::string(to_string(e.variant())) + ") is not trained");
    }
    slots_[slot] = &e;
  }
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    if (slots_[s] == nullptr) {
      throw InvalidArgument("missing expert for class " + std::to_string(s / 2) + " (" +
                            (s % 2 == 0 ? "domain" : "general") + ")");
    }
  }
}

ZVector ExpertPanel::assemble(std::string_view text) const {
  std::vector<double> values(slots_.size());
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    values[s] = predict(*slots_[s], text).positive;
  }
  return ZVector(std::move(values));
}

ZVector assemble_z(std::span<const BinaryExpert> experts, std::size_t num_classes,
                   const FormattedInput& input) {
  return ExpertPanel(experts, num_classes).assemble(input.text);
}

std::size_t argmax_first(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

ClassIndex max_vote(std::span<const double> slots) { return argmax_first(slots) / 2; }

AverageVote avg_vote(std::span<const double> slots) {
  AverageVote out;
  const std::size_t k = slots.size() / 2;
  out.consensus.resize(k);
  for (std::size_t j = 0; j < k; ++j) out.consensus[j] = 0.5 * (slots[2 * j] + slots[2 * j + 1]);
  out.label = argmax_first(out.consensus);
  return out;
}

VoteTally tally_votes(std::span<const double> slots, double threshold) {
  VoteTally t;
  t.counts.assign(slots.size() / 2, 0);
  for (std::size_t s = 0; s < slots.size(); ++s) {
    if (slots[s] >= threshold) ++t.counts[s / 2];
  }
  return t;
}

ClassIndex majority_vote(std::span<const double> slots, double threshold) {
  const VoteTally t = tally_votes(slots, threshold);
  const int top = *std::max_element(t.counts.begin(), t.counts.end());
  std::vector<ClassIndex> tied;
  for (std::size_t j = 0; j < t.counts.size(); ++j) {
    if (t.counts[j] == top) tied.push_back(j);
  }
  if (tied.size() == 1) return tied.front();

  const AverageVote avg = avg_vote(slots);
  ClassIndex best = tied.front();
  for (ClassIndex j : tied) {
    if (avg.consensus[j] > avg.consensus[best]) best = j;
  }
  return best;
}

namespace {

void write_rows(std::ostream& out, const ZSet& zset) {
  char buf[32];
  for (std::size_t i = 0; i < zset.rows.size(); ++i) {
    for (double v : zset.rows[i].values) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << zset.labels[i] << '\n';
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void write_zset(std::ostream& out, const ZSet& zset, const LabelSchema& schema) {
  if (zset.rows.size() != zset.labels.size()) throw InvalidArgument("z rows/labels mismatch");
  for (std::size_t j = 0; j < schema.size(); ++j) {
    out << schema.class_name(j) << "_domain," << schema.class_name(j) << "_general,";
  }
  out << "label\n";
  write_rows(out, zset);
}

void write_zset(std::ostream& out, const ZSet& zset) {
  if (zset.rows.size() != zset.labels.size()) throw InvalidArgument("z rows/labels mismatch");
  for (std::size_t j = 0; j < zset.num_classes(); ++j) {
    out << 'c' << j << "_domain,c" << j << "_general,";
  }
  out << "label\n";
  write_rows(out, zset);
}

ZSet read_zset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty z-vector file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  if (header.size() < 5 || header.size() % 2 == 0 || header.back() != "label") {
    throw ParseError("z-vector header must be 2K probability columns then 'label'", 1);
  }
  const std::size_t width = header.size() - 1;
  const std::size_t k = width / 2;

  ZSet out;
  for (std::size_t j = 0; j < k; ++j) {
    const std::string& col = header[2 * j];
    constexpr std::string_view suffix = "_domain";
    out.class_names.push_back(col.ends_with(suffix) ? col.substr(0, col.size() - suffix.size()) : col);
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw ParseError("wrong column count", line_no);
    std::vector<double> values(width);
    for (std::size_t c = 0; c < width; ++c) {
      try {
        std::size_t used = 0;
        values[c] = std::stod(cells[c], &used);
        if (used != cells[c].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ParseError("bad probability '" + cells[c] + "'", line_no);
      }
    }
    ZVector z(std::move(values));
    try {
      z.validate(k);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
    ClassIndex label = 0;
    const auto& lc = cells.back();
    auto [ptr, ec] = std::from_chars(lc.data(), lc.data() + lc.size(), label);
    if (ec != std::errc{} || ptr != lc.data() + lc.size() || label >= k) {
      throw ParseError("bad label '" + lc + "'", line_no);
    }
    out.rows.push_back(std::move(z));
    out.labels.push_back(label);
  }
  return out;
}

}  // namespace citefusion
