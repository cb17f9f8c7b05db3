#pragma once

// Classification service over a (WS, WoS) bundle pair: request parsing,
// mode routing, the reliability threshold and the result JSON.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citefusion/errors.hpp"
#include "citefusion/pipeline.hpp"
#include "citefusion/report.hpp"

namespace citefusion {

inline constexpr double kDefaultThreshold = 0.90;
inline constexpr std::size_t kMaxBatchItems = 512;
inline constexpr std::string_view kFallbackCito = kCitesForInformation;

enum class Mode { mixed, with_sections, without_sections };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

struct ClassifyItem {
  std::optional<std::string> section_title;
  std::string context;
};

struct ClassifyRequest {
  std::vector<ClassifyItem> items;
  Mode mode = Mode::mixed;
  double threshold = kDefaultThreshold;
};

// Invalid request; `field` names the offending JSON path, e.g. items[2].context.
class RequestError : public InvalidArgument {
 public:
  RequestError(std::string field, const std::string& message)
      : InvalidArgument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Body: {"items":[{"section_title":?, "context":...}], "mode":?, "threshold":?}.
// Items may also be bare strings (context only). Throws RequestError.
ClassifyRequest parse_classify_request(std::string_view body,
                                       std::size_t max_items = kMaxBatchItems);
void validate_request(const ClassifyRequest& request, std::size_t max_items = kMaxBatchItems);

struct ClassifyResult {
  Setting setting = Setting::WS;  // bundle applied
  bool fell_back_to_wos = false;
  std::vector<double> rho1;           // slot order
  std::vector<double> probabilities;  // meta head
  ClassIndex predicted = 0;
  double confidence = 0.0;  // max meta probability
  bool reliable = false;    // confidence > threshold
  std::string cito;         // predicted class IRI, or the fallback when unreliable
};

class Classifier {
 public:
  // At least one bundle; when both are given their schemas must match.
  Classifier(std::optional<EnsembleBundle> ws, std::optional<EnsembleBundle> wos);

  const LabelSchema& schema() const;
  bool has(Setting setting) const;
  const EnsembleBundle& bundle(Setting setting) const;  // StateError when absent

  // Setting each item is routed to under `mode`.
  Setting route(const ClassifyItem& item, Mode mode) const;

  // Pure and all-or-nothing: validation and routing are checked for every
  // item before any result is produced.
  std::vector<ClassifyResult> classify(const ClassifyRequest& request) const;
  Json explain(const ClassifyRequest& request) const;

  Json results_json(const ClassifyRequest& request, const std::vector<ClassifyResult>& results) const;
  Json schema_json() const;
  Json health_json() const;

 private:
  FormattedInput format(const ClassifyItem& item, Mode mode, Setting setting) const;
  void check_routes(const ClassifyRequest& request) const;

  std::optional<EnsembleBundle> ws_;
  std::optional<EnsembleBundle> wos_;
};

// Serialized /classify body; the same bytes are written by the CLI and
// compared by `classify --verify`.
std::string classify_body(const Classifier& classifier, const ClassifyRequest& request);

}  // namespace citefusion
