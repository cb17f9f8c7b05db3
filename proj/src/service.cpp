#include "citefusion/service.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include "citefusion/explain.hpp"

namespace citefusion {

namespace {

bool has_title(const std::optional<std::string>& title) {
  return title && std::any_of(title->begin(), title->end(),
                              [](unsigned char c) { return !std::isspace(c); });
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::mixed: return "mixed";
    case Mode::with_sections: return "with_sections";
    case Mode::without_sections: return "without_sections";
  }
  return "mixed";
}

Mode parse_mode(std::string_view text) {
  if (text == "mixed") return Mode::mixed;
  if (text == "with_sections") return Mode::with_sections;
  if (text == "without_sections") return Mode::without_sections;
  throw InvalidArgument("unknown mode '" + std::string(text) +
                        "' (expected mixed, with_sections or without_sections)");
}

void validate_request(const ClassifyRequest& request, std::size_t max_items) {
  if (request.items.empty()) throw RequestError("items", "must contain at least one item");
  if (request.items.size() > max_items) {
    throw RequestError("items", "batch of " + std::to_string(request.items.size()) +
                                    " exceeds the limit of " + std::to_string(max_items));
  }
  if (!(request.threshold > 0.0 && request.threshold <= 1.0)) {
    throw RequestError("threshold", "must lie in (0, 1]");
  }
  for (std::size_t i = 0; i < request.items.size(); ++i) {
    if (blank(request.items[i].context)) {
      throw RequestError("items[" + std::to_string(i) + "].context", "must be non-empty");
    }
  }
}

ClassifyRequest parse_classify_request(std::string_view body, std::size_t max_items) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw RequestError("body", std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw RequestError("body", "must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "items" && key != "mode" && key != "threshold") {
      throw RequestError(key, "unknown field");
    }
  }
  ClassifyRequest req;
  if (j.contains("mode")) {
    if (!j["mode"].is_string()) throw RequestError("mode", "must be a string");
    try {
      req.mode = parse_mode(j["mode"].get<std::string>());
    } catch (const InvalidArgument& e) {
      throw RequestError("mode", e.what());
    }
  }
  if (j.contains("threshold")) {
    if (!j["threshold"].is_number()) throw RequestError("threshold", "must be a number");
    req.threshold = j["threshold"].get<double>();
  }
  if (!j.contains("items")) throw RequestError("items", "missing");
  const auto& items = j["items"];
  if (!items.is_array()) throw RequestError("items", "must be an array");
  if (items.size() > max_items) {
    throw RequestError("items", "batch of " + std::to_string(items.size()) +
                                    " exceeds the limit of " + std::to_string(max_items));
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string where = "items[" + std::to_string(i) + "]";
    const auto& it = items[i];
    ClassifyItem item;
    if (it.is_string()) {
      item.context = it.get<std::string>();
    } else if (it.is_object()) {
      for (const auto& [key, value] : it.items()) {
        if (key != "context" && key != "section_title") throw RequestError(where + "." + key, "unknown field");
      }
      if (!it.contains("context")) throw RequestError(where + ".context", "missing");
      if (!it["context"].is_string()) throw RequestError(where + ".context", "must be a string");
      item.context = it["context"].get<std::string>();
      if (it.contains("section_title") && !it["section_title"].is_null()) {
        if (!it["section_title"].is_string()) {
          throw RequestError(where + ".section_title", "must be a string or null");
        }
        item.section_title = it["section_title"].get<std::string>();
      }
    } else {
      throw RequestError(where, "must be an object or a string");
    }
    req.items.push_back(std::move(item));
  }
  validate_request(req, max_items);
  return req;
}

Classifier::Classifier(std::optional<EnsembleBundle> ws, std::optional<EnsembleBundle> wos)
    : ws_(std::move(ws)), wos_(std::move(wos)) {
  if (!ws_ && !wos_) throw InvalidArgument("classifier needs at least one bundle");
  if (ws_) {
    ws_->validate();
    if (ws_->setting != Setting::WS) throw InvalidArgument("WS slot holds a WoS-trained bundle");
  }
  if (wos_) {
    wos_->validate();
    if (wos_->setting != Setting::WoS) throw InvalidArgument("WoS slot holds a WS-trained bundle");
  }
  if (ws_ && wos_ && ws_->schema != wos_->schema) {
    throw InvalidArgument("WS and WoS bundles use different label schemas");
  }
}

const LabelSchema& Classifier::schema() const { return ws_ ? ws_->schema : wos_->schema; }

bool Classifier::has(Setting setting) const {
  return setting == Setting::WS ? ws_.has_value() : wos_.has_value();
}

const EnsembleBundle& Classifier::bundle(Setting setting) const {
  if (!has(setting)) {
    throw StateError("no bundle loaded for setting " + std::string(to_string(setting)));
  }
  return setting == Setting::WS ? *ws_ : *wos_;
}

Setting Classifier::route(const ClassifyItem& item, Mode mode) const {
  switch (mode) {
    case Mode::with_sections: return Setting::WS;
    case Mode::without_sections: return Setting::WoS;
    case Mode::mixed: break;
  }
  return has_title(item.section_title) ? Setting::WS : Setting::WoS;
}

FormattedInput Classifier::format(const ClassifyItem& item, Mode mode, Setting setting) const {
  if (mode == Mode::without_sections) return format_input(std::nullopt, item.context, Setting::WoS);
  return format_input(item.section_title, item.context, setting);
}

void Classifier::check_routes(const ClassifyRequest& request) const {
  validate_request(request, std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < request.items.size(); ++i) {
    const Setting s = route(request.items[i], request.mode);
    if (!has(s)) {
      throw StateError("items[" + std::to_string(i) + "] needs the " +
                       std::string(to_string(s)) + " bundle, which is not loaded");
    }
  }
}

std::vector<ClassifyResult> Classifier::classify(const ClassifyRequest& request) const {
  check_routes(request);
  std::vector<ClassifyResult> out;
  out.reserve(request.items.size());
  for (const auto& item : request.items) {
    const Setting s = route(item, request.mode);
    const EnsembleBundle& b = bundle(s);
    const FormattedInput input = format(item, request.mode, s);
    const ExpertPanel panel(b.experts, b.num_classes());
    const ZVector z = panel.assemble(input.text);
    const MetaPrediction p = ffnn_predict(b.meta, z);

    ClassifyResult r;
    r.setting = s;
    r.fell_back_to_wos = input.fell_back_to_wos;
    r.rho1 = z.values;
    r.probabilities = p.probabilities;
    r.predicted = p.label;
    r.confidence = *std::max_element(p.probabilities.begin(), p.probabilities.end());
    r.reliable = r.confidence > request.threshold;
    r.cito = r.reliable ? cito_for(b.schema, p.label) : std::string(kFallbackCito);
    out.push_back(std::move(r));
  }
  return out;
}

Json Classifier::results_json(const ClassifyRequest& request,
                              const std::vector<ClassifyResult>& results) const {
  const LabelSchema& s = schema();
  Json arr = Json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const auto& item = request.items[i];
    Json o;
    o["index"] = i;
    o["section_title"] = item.section_title ? Json(*item.section_title) : Json(nullptr);
    o["context"] = item.context;
    o["setting"] = std::string(to_string(r.setting));
    o["fell_back_to_wos"] = r.fell_back_to_wos;
    Json experts = Json::object();
    for (std::size_t slot = 0; slot < r.rho1.size(); ++slot) experts[expert_label(s, slot)] = r.rho1[slot];
    o["experts"] = std::move(experts);
    Json probs = Json::object();
    for (std::size_t j = 0; j < r.probabilities.size(); ++j) probs[s.class_name(j)] = r.probabilities[j];
    o["probabilities"] = std::move(probs);
    o["predicted_class"] = s.class_name(r.predicted);
    o["confidence"] = r.confidence;
    o["reliable"] = r.reliable;
    o["threshold"] = request.threshold;
    o["cito"] = r.cito;
    arr.push_back(std::move(o));
  }
  return arr;
}

Json Classifier::explain(const ClassifyRequest& request) const {
  check_routes(request);
  Json arr = Json::array();
  for (std::size_t i = 0; i < request.items.size(); ++i) {
    const auto& item = request.items[i];
    const Setting s = route(item, request.mode);
    Json rep = explain_instance_report(bundle(s), format(item, request.mode, s), std::to_string(i));
    double confidence = 0;
    for (const auto& [name, p] : rep["probabilities"].items()) confidence = std::max(confidence, p.get<double>());
    rep["reliable"] = confidence > request.threshold;
    arr.push_back(std::move(rep));
  }
  return arr;
}

Json Classifier::schema_json() const {
  const LabelSchema& s = schema();
  Json o;
  o["dataset"] = s.dataset_name();
  o["classes"] = s.classes();
  Json map = Json::object();
  for (std::size_t j = 0; j < s.size(); ++j) map[s.class_name(j)] = s.cito_iris()[j];
  o["cito"] = std::move(map);
  o["fallback"] = std::string(kFallbackCito);
  return o;
}

Json Classifier::health_json() const {
  Json o;
  o["status"] = "ok";
  o["dataset"] = schema().dataset_name();
  Json bundles = Json::object();
  for (Setting s : {Setting::WS, Setting::WoS}) {
    if (!has(s)) continue;
    const auto& b = bundle(s);
    bundles[std::string(to_string(s))] = Json{{"seed", b.seed},
                                              {"classes", b.num_classes()},
                                              {"experts", b.experts.size()},
                                              {"hidden_width", b.meta.hidden}};
  }
  o["bundles"] = std::move(bundles);
  o["max_batch"] = kMaxBatchItems;
  o["default_threshold"] = kDefaultThreshold;
  return o;
}

std::string classify_body(const Classifier& classifier, const ClassifyRequest& request) {
  return classifier.results_json(request, classifier.classify(request)).dump(2) + "\n";
}

}  // namespace citefusion
