#pragma once

// Citation-intent datasets: label schemas with their CiTO mapping, JSON-lines
// loading, WS/WoS input formatting and one-vs-all binarization.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace citefusion {

using ClassIndex = std::size_t;

inline constexpr std::string_view kCitoPrefix = "http://purl.org/spar/cito/";
inline constexpr std::string_view kCitesForInformation =
    "http://purl.org/spar/cito/citesForInformation";

enum class Split { train, val, test };
enum class Setting { WS, WoS };

std::string_view to_string(Split split);
std::string_view to_string(Setting setting);
Split parse_split(std::string_view text);
Setting parse_setting(std::string_view text);

// Ordered class names of a dataset. Index j is the class identity used
// everywhere else (OVA task j, z-vector slots 2j/2j+1, meta logit j).
class LabelSchema {
 public:
  LabelSchema() = default;
  // Throws InvalidArgument on fewer than two classes, duplicate names
  // (case-insensitive) or a class/IRI count mismatch.
  LabelSchema(std::string dataset_name, std::vector<std::string> classes,
              std::vector<std::string> cito_iris);

  const std::string& dataset_name() const { return dataset_name_; }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<std::string>& cito_iris() const { return cito_iris_; }
  std::size_t size() const { return classes_.size(); }

  const std::string& class_name(ClassIndex j) const;
  // Case-insensitive lookup with surrounding whitespace trimmed.
  std::optional<ClassIndex> find(std::string_view name) const;

  bool operator==(const LabelSchema&) const = default;

 private:
  std::string dataset_name_;
  std::vector<std::string> classes_;
  std::vector<std::string> cito_iris_;
};

LabelSchema scicite_schema();
LabelSchema aclarc_schema();

// Schema text format, one entry per line, class order = line order:
//
//   # comment
//   dataset = scicite
//   Method = http://purl.org/spar/cito/usesMethodIn
//   Background = http://purl.org/spar/cito/obtainsBackgroundFrom
//
// The first `dataset = ...` line names the dataset; every other `key = value`
// line declares a class and its IRI.
LabelSchema parse_schema(std::string_view text);
LabelSchema load_schema(const std::filesystem::path& path);
std::string format_schema(const LabelSchema& schema);

// Returns the CiTO IRI mapped to class j. Throws InvalidArgument when j is
// out of range.
const std::string& cito_for(const LabelSchema& schema, ClassIndex j);

struct CitationInstance {
  std::optional<std::string> section_title;
  std::string context;
  ClassIndex label = 0;
  std::optional<double> annotation_confidence;
  Split split = Split::train;

  bool operator==(const CitationInstance&) const = default;
};

struct Dataset {
  LabelSchema schema;
  std::vector<CitationInstance> instances;

  std::vector<CitationInstance> split(Split which) const;
  std::size_t count(Split which) const;
};

// Which JSON keys carry each field. The defaults accept both public release
// formats (SciCite: string/sectionName/label/label_confidence; ACL-ARC:
// text/section_name/intent) as well as the canonical keys written by
// `save_dataset`.
struct FieldMap {
  std::vector<std::string> text{"context", "string", "text", "cleaned_cite_text"};
  std::vector<std::string> section{"section_title", "sectionName", "section_name"};
  std::vector<std::string> label{"label", "intent"};
  std::vector<std::string> split{"split"};
  std::vector<std::string> confidence{"annotation_confidence", "label_confidence",
                                      "confidence"};
};

struct LoadOptions {
  FieldMap fields;
  // Split assigned when a record has no split field (the public releases
  // ship one file per split).
  Split default_split = Split::train;
};

// Every line is parsed or rejected; the first rejection raises a ParseError
// carrying its 1-based line number. Blank lines are skipped.
Dataset read_dataset(std::istream& in, const LabelSchema& schema,
                     const LoadOptions& options = {});
Dataset load_dataset(const std::filesystem::path& path, const LabelSchema& schema,
                     const LoadOptions& options = {});

// Canonical JSON-lines form, readable by `read_dataset` with default options.
void write_dataset(std::ostream& out, const Dataset& dataset);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);

struct FormattedInput {
  std::string text;
  Setting setting = Setting::WS;
  // Set when WS was requested but the instance had no usable section title.
  bool fell_back_to_wos = false;

  bool operator==(const FormattedInput&) const = default;
};

FormattedInput format_input(const std::optional<std::string>& section_title,
                            std::string_view context, Setting setting);
FormattedInput format_input(const CitationInstance& instance, Setting setting);

struct BinaryItem {
  FormattedInput input;
  int label = 0;  // 1 when the source label equals the target class
};

struct BinaryDataset {
  ClassIndex target_class = 0;
  std::vector<BinaryItem> items;

  std::size_t positives() const;
};

// One-vs-all view of a split for class `target_class`; order is preserved.
BinaryDataset ova_binarize(std::span<const CitationInstance> split,
                           ClassIndex target_class, Setting setting);

}  // namespace citefusion
