#include "citefusion/report.hpp"

#include "citefusion/explain.hpp"

namespace citefusion {

Json explain_instance_report(const EnsembleBundle& bundle, const FormattedInput& input,
                             const std::optional<std::string>& instance_id) {
  const std::size_t k = bundle.num_classes();
  const ExpertPanel panel(bundle.experts, k);

  Json r;
  if (instance_id) r["id"] = *instance_id;
  r["setting"] = std::string(to_string(bundle.setting));
  r["text"] = input.text;
  r["fell_back_to_wos"] = input.fell_back_to_wos;
  if (input.fell_back_to_wos) r["note"] = "no section title; WS bundle applied to the bare context";

  ZVector z;
  z.values.resize(2 * k);
  Json experts = Json::array();
  for (std::size_t s = 0; s < 2 * k; ++s) {
    const BinaryExpert& e = panel.expert(s);
    const BinaryProbabilities p = predict(e, input);
    z.values[s] = p.positive;
    const auto tokens = token_attributions(e, input.text);
    const AttributionMass m = attribution_mass(tokens);
    Json ex;
    ex["expert"] = expert_label(bundle.schema, s);
    ex["class"] = bundle.schema.class_name(e.target_class());
    ex["variant"] = std::string(to_string(e.variant()));
    ex["rho1"] = p.positive;
    ex["bias"] = e.bias();
    Json toks = Json::array();
    for (const auto& t : tokens) toks.push_back(Json{{"token", t.token}, {"attribution", t.contribution}});
    ex["tokens"] = std::move(toks);
    ex["mass"] = Json{{"positive", m.positive}, {"negative", m.negative}, {"signed", m.signed_mass}};
    experts.push_back(std::move(ex));
  }
  r["experts"] = std::move(experts);

  const FfnnClassifier head(bundle.meta);
  const MetaPrediction pred = head.predict(z.values);
  Json probs = Json::object();
  for (std::size_t j = 0; j < k; ++j) probs[bundle.schema.class_name(j)] = pred.probabilities[j];
  r["probabilities"] = std::move(probs);
  r["predicted_class"] = bundle.schema.class_name(pred.label);
  r["cito"] = cito_for(bundle.schema, pred.label);

  const ShapleyReport sh = exact_shapley(head, z, bundle.baseline, pred.label);
  Json shap;
  shap["output_class"] = bundle.schema.class_name(pred.label);
  shap["baseline_value"] = sh.baseline_value;
  shap["value"] = sh.full_value;
  Json phi = Json::object();
  for (std::size_t s = 0; s < 2 * k; ++s) phi[expert_label(bundle.schema, s)] = sh.phi[s];
  shap["phi"] = std::move(phi);
  shap["efficiency_residual"] = sh.efficiency_residual;
  r["shapley"] = std::move(shap);
  return r;
}

Json explain_instance_report(const EnsembleBundle& bundle, const CitationInstance& instance,
                             const std::optional<std::string>& instance_id) {
  return explain_instance_report(bundle, format_input(instance, bundle.setting), instance_id);
}

}  // namespace citefusion
