#include "citefusion/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "citefusion/errors.hpp"
#include "json.hpp"

namespace citefusion {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

const json* find_field(const json& record, const std::vector<std::string>& keys) {
  for (const auto& key : keys) {
    auto it = record.find(key);
    if (it != record.end() && !it->is_null()) return &*it;
  }
  return nullptr;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

std::string_view to_string(Setting setting) {
  return setting == Setting::WS ? "WS" : "WoS";
}

Split parse_split(std::string_view text) {
  const std::string s = lower(trim(text));
  if (s == "train") return Split::train;
  if (s == "val" || s == "dev" || s == "validation") return Split::val;
  if (s == "test") return Split::test;
  throw InvalidArgument("unknown split '" + std::string(text) + "'");
}

Setting parse_setting(std::string_view text) {
  const std::string s = lower(trim(text));
  if (s == "ws") return Setting::WS;
  if (s == "wos") return Setting::WoS;
  throw InvalidArgument("unknown setting '" + std::string(text) + "' (expected WS or WoS)");
}

LabelSchema::LabelSchema(std::string dataset_name, std::vector<std::string> classes,
                         std::vector<std::string> cito_iris)
    : dataset_name_(std::move(dataset_name)),
      classes_(std::move(classes)),
      cito_iris_(std::move(cito_iris)) {
  if (classes_.size() < 2) {
    throw InvalidArgument("a label schema needs at least two classes");
  }
  if (classes_.size() != cito_iris_.size()) {
    throw InvalidArgument("every class needs exactly one CiTO IRI");
  }
  for (std::size_t a = 0; a < classes_.size(); ++a) {
    if (trim(classes_[a]).empty()) throw InvalidArgument("empty class name");
    if (trim(cito_iris_[a]).empty()) {
      throw InvalidArgument("class '" + classes_[a] + "' has an empty IRI");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (lower(trim(classes_[a])) == lower(trim(classes_[b]))) {
        throw InvalidArgument("duplicate class name '" + classes_[a] + "'");
      }
    }
  }
}

const std::string& LabelSchema::class_name(ClassIndex j) const {
  if (j >= classes_.size()) {
    throw InvalidArgument("class index " + std::to_string(j) + " out of range");
  }
  return classes_[j];
}

std::optional<ClassIndex> LabelSchema::find(std::string_view name) const {
  const std::string key = lower(trim(name));
  for (std::size_t j = 0; j < classes_.size(); ++j) {
    if (lower(trim(classes_[j])) == key) return j;
  }
  return std::nullopt;
}

LabelSchema scicite_schema() {
  const std::string p(kCitoPrefix);
  return LabelSchema("scicite", {"Method", "Background", "Result"},
                     {p + "usesMethodIn", p + "obtainsBackgroundFrom",
                      p + "usesConclusionsFrom"});
}

LabelSchema aclarc_schema() {
  const std::string p(kCitoPrefix);
  return LabelSchema(
      "acl-arc",
      {"Background", "Uses", "CompareOrContrast", "Extends", "Motivation", "Future"},
      {p + "obtainsBackgroundFrom", p + "usesMethodIn", p + "discusses", p + "extends",
       p + "obtainsSupportFrom", p + "citesAsPotentialSolution"});
}

LabelSchema parse_schema(std::string_view text) {
  std::string name;
  std::vector<std::string> classes;
  std::vector<std::string> iris;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("expected 'key = value' in schema", line_no);
    }
    const std::string key(trim(view.substr(0, eq)));
    const std::string value(trim(view.substr(eq + 1)));
    if (key.empty() || value.empty()) {
      throw ParseError("empty key or value in schema", line_no);
    }
    if (lower(key) == "dataset" && name.empty()) {
      name = value;
    } else {
      classes.push_back(key);
      iris.push_back(value);
    }
  }
  if (name.empty()) throw ParseError("schema has no 'dataset = ...' line");
  return LabelSchema(std::move(name), std::move(classes), std::move(iris));
}

LabelSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open schema file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_schema(buffer.str());
}

std::string format_schema(const LabelSchema& schema) {
  std::string out = "dataset = " + schema.dataset_name() + "\n";
  for (std::size_t j = 0; j < schema.size(); ++j) {
    out += schema.classes()[j] + " = " + schema.cito_iris()[j] + "\n";
  }
  return out;
}

const std::string& cito_for(const LabelSchema& schema, ClassIndex j) {
  if (j >= schema.size()) {
    throw InvalidArgument("class index " + std::to_string(j) + " out of range for schema '" +
                          schema.dataset_name() + "'");
  }
  return schema.cito_iris()[j];
}

std::vector<CitationInstance> Dataset::split(Split which) const {
  std::vector<CitationInstance> out;
  for (const auto& inst : instances) {
    if (inst.split == which) out.push_back(inst);
  }
  return out;
}

std::size_t Dataset::count(Split which) const {
  return static_cast<std::size_t>(std::count_if(
      instances.begin(), instances.end(),
      [which](const CitationInstance& i) { return i.split == which; }));
}

Dataset read_dataset(std::istream& in, const LabelSchema& schema, const LoadOptions& options) {
  Dataset dataset{schema, {}};
  const FieldMap& f = options.fields;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;

    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON (") + e.what() + ")", line_no);
    }
    if (!record.is_object()) throw ParseError("record is not a JSON object", line_no);

    CitationInstance inst;
    const json* text = find_field(record, f.text);
    if (text == nullptr || !text->is_string()) {
      throw ParseError("missing citation text", line_no);
    }
    inst.context = text->get<std::string>();
    if (trim(inst.context).empty()) throw ParseError("empty context", line_no);

    if (const json* section = find_field(record, f.section); section && !section->is_null()) {
      if (!section->is_string()) throw ParseError("section title is not a string", line_no);
      inst.section_title = section->get<std::string>();
    }

    const json* label = find_field(record, f.label);
    if (label == nullptr) throw ParseError("missing label", line_no);
    if (label->is_string()) {
      auto j = schema.find(label->get<std::string>());
      if (!j) throw ParseError("unknown label '" + label->get<std::string>() + "'", line_no);
      inst.label = *j;
    } else if (label->is_number_unsigned() && label->get<std::size_t>() < schema.size()) {
      inst.label = label->get<std::size_t>();
    } else {
      throw ParseError("unknown label " + label->dump(), line_no);
    }

    inst.split = options.default_split;
    if (const json* split = find_field(record, f.split)) {
      try {
        inst.split = parse_split(split->get<std::string>());
      } catch (const std::exception& e) {
        throw ParseError(std::string("bad split: ") + e.what(), line_no);
      }
    }

    if (const json* conf = find_field(record, f.confidence); conf && !conf->is_null()) {
      if (!conf->is_number()) throw ParseError("confidence is not a number", line_no);
      const double c = conf->get<double>();
      if (!(c >= 0.0 && c <= 1.0)) throw ParseError("confidence outside [0,1]", line_no);
      inst.annotation_confidence = c;
    }
    dataset.instances.push_back(std::move(inst));
  }
  return dataset;
}

Dataset load_dataset(const std::filesystem::path& path, const LabelSchema& schema,
                     const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file " + path.string());
  return read_dataset(in, schema, options);
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  for (const auto& inst : dataset.instances) {
    json record;
    record["context"] = inst.context;
    if (inst.section_title) record["section_title"] = *inst.section_title;
    record["label"] = dataset.schema.class_name(inst.label);
    record["split"] = std::string(to_string(inst.split));
    if (inst.annotation_confidence) record["annotation_confidence"] = *inst.annotation_confidence;
    out << record.dump() << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset file " + path.string());
  write_dataset(out, dataset);
}

FormattedInput format_input(const std::optional<std::string>& section_title,
                            std::string_view context, Setting setting) {
  FormattedInput out;
  out.setting = setting;
  if (setting == Setting::WoS) {
    out.text = std::string(context);
    return out;
  }
  if (section_title && !trim(*section_title).empty()) {
    out.text = *section_title + ". " + std::string(context);
  } else {
    out.text = std::string(context);
    out.fell_back_to_wos = true;
  }
  return out;
}

FormattedInput format_input(const CitationInstance& instance, Setting setting) {
  return format_input(instance.section_title, instance.context, setting);
}

std::size_t BinaryDataset::positives() const {
  return static_cast<std::size_t>(std::count_if(
      items.begin(), items.end(), [](const BinaryItem& it) { return it.label == 1; }));
}

BinaryDataset ova_binarize(std::span<const CitationInstance> split, ClassIndex target_class,
                           Setting setting) {
  BinaryDataset out;
  out.target_class = target_class;
  out.items.reserve(split.size());
  for (const auto& inst : split) {
    out.items.push_back({format_input(inst, setting), inst.label == target_class ? 1 : 0});
  }
  return out;
}

}  // namespace citefusion
