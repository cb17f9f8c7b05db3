#include "citefusion/synthetic.hpp"

#include <cctype>
#include <cmath>
#include <random>
#include <string>

#include "citefusion/errors.hpp"
#include "citefusion/training.hpp"

namespace citefusion {

namespace {

using Pool = std::vector<const char*>;

const std::array<Pool, 3> kCues{{
    {"using", "algorithm", "implementation", "procedure", "adopted", "toolkit", "protocol",
     "following", "technique", "applied", "parameters", "estimated"},
    {"previous", "studies", "shown", "known", "widely", "reported", "literature", "recent",
     "extensively", "investigated", "established", "prior"},
    {"consistent", "similar", "findings", "agree", "observed", "confirm", "comparable",
     "outperform", "higher", "lower", "matches", "corroborate"},
}};

const std::array<Pool, 3> kTitles{{
    {"Methods", "Materials and Methods", "Experimental Setup", "Implementation"},
    {"Introduction", "Related Work", "Background"},
    {"Results", "Discussion", "Evaluation"},
}};

const Pool kFiller{"the",     "of",    "and",      "in",       "a",        "to",     "is",
                   "for",     "that",  "with",     "on",       "this",     "model",  "data",
                   "analysis", "proposed", "work", "approach", "system", "study", "cells",
                   "protein", "network", "sample", "method", "effect", "between", "were",
                   "as",      "by",    "from",     "these",    "we",       "our"};

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string marker(std::mt19937_64& rng) {
  switch (pick(rng, 3)) {
    case 0: return "[" + std::to_string(1 + pick(rng, 60)) + "]";
    case 1: return "(" + std::to_string(1990 + pick(rng, 30)) + ")";
    default: return "[" + std::to_string(1 + pick(rng, 40)) + ", " + std::to_string(41 + pick(rng, 20)) + "]";
  }
}

std::string sentence(std::mt19937_64& rng, ClassIndex label, const SyntheticOptions& o) {
  std::vector<std::string> words;
  const std::size_t filler = o.min_filler + pick(rng, o.max_filler - o.min_filler + 1);
  for (std::size_t i = 0; i < filler; ++i) words.emplace_back(kFiller[pick(rng, kFiller.size())]);
  if (pick(rng, 4) == 0) words.push_back(std::to_string(pick(rng, 1000)));
  for (std::size_t c = 0; c < o.cues_per_sentence; ++c) {
    ClassIndex source = label;
    if (unit(rng) < o.cue_noise) source = (label + 1 + pick(rng, kCues.size() - 1)) % kCues.size();
    const auto& pool = kCues[source];
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(pick(rng, words.size() + 1)),
                 pool[pick(rng, pool.size())]);
  }
  words.insert(words.begin() + static_cast<std::ptrdiff_t>(1 + pick(rng, words.size())), marker(rng));
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  out += '.';
  return out;
}

}  // namespace

void SyntheticOptions::validate() const {
  if (size < 10) throw InvalidArgument("synthetic corpus needs at least 10 instances");
  if (proportions.size() != kCues.size()) {
    throw InvalidArgument("synthetic proportions must list 3 classes");
  }
  double total = 0;
  for (double p : proportions) {
    if (!(p > 0)) throw InvalidArgument("synthetic proportions must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("synthetic proportions must sum to 1");
  for (double p : {cue_noise, title_signal, missing_title}) {
    if (!(p >= 0 && p <= 1)) throw InvalidArgument("synthetic probabilities must lie in [0,1]");
  }
  if (min_filler == 0 || max_filler < min_filler) throw InvalidArgument("bad filler length range");
  double split_total = 0;
  for (double f : split_fractions) {
    if (!(f > 0)) throw InvalidArgument("split fractions must be positive");
    split_total += f;
  }
  if (std::abs(split_total - 1.0) > 1e-9) throw InvalidArgument("split fractions must sum to 1");
}

LabelSchema synthetic_schema() {
  const LabelSchema s = scicite_schema();
  return LabelSchema("synthetic", s.classes(), s.cito_iris());
}

Dataset generate_synthetic(const SyntheticOptions& o) {
  o.validate();
  std::mt19937_64 rng(mix_seed(o.seed, 0x5EED));

  std::vector<ClassIndex> labels;
  std::size_t assigned = 0;
  for (std::size_t j = 1; j < o.proportions.size(); ++j) {
    const auto n = static_cast<std::size_t>(std::llround(o.proportions[j] * static_cast<double>(o.size)));
    labels.insert(labels.end(), n, j);
    assigned += n;
  }
  labels.insert(labels.begin(), o.size - assigned, 0);

  std::vector<std::size_t> order(o.size);
  for (std::size_t i = 0; i < o.size; ++i) order[i] = i;
  deterministic_shuffle(order, rng);

  const auto n_train = static_cast<std::size_t>(std::llround(o.split_fractions[0] * static_cast<double>(o.size)));
  const auto n_val = static_cast<std::size_t>(std::llround(o.split_fractions[1] * static_cast<double>(o.size)));

  Dataset d;
  d.schema = synthetic_schema();
  d.instances.reserve(o.size);
  for (std::size_t pos = 0; pos < o.size; ++pos) {
    const ClassIndex label = labels[order[pos]];
    CitationInstance inst;
    inst.label = label;
    inst.split = pos < n_train ? Split::train : pos < n_train + n_val ? Split::val : Split::test;
    if (unit(rng) >= o.missing_title) {
      const ClassIndex source = unit(rng) < o.title_signal ? label : pick(rng, kTitles.size());
      inst.section_title = kTitles[source][pick(rng, kTitles[source].size())];
    }
    inst.context = sentence(rng, label, o);
    d.instances.push_back(std::move(inst));
  }
  return d;
}

}  // namespace citefusion
