#pragma once

// Per-instance explanation document: every expert's token attributions,
// rho1 and attribution masses, the meta probabilities, the prediction with
// its CiTO IRI, and the exact Shapley values of the meta head for the
// predicted class.

#include <optional>
#include <string>

#include "citefusion/pipeline.hpp"
#include "json.hpp"

namespace citefusion {

using Json = nlohmann::ordered_json;

// `input` should be formatted with the bundle's setting; a WS input that fell
// back to the bare context is noted in the report.
Json explain_instance_report(const EnsembleBundle& bundle, const FormattedInput& input,
                             const std::optional<std::string>& instance_id = std::nullopt);

Json explain_instance_report(const EnsembleBundle& bundle, const CitationInstance& instance,
                             const std::optional<std::string>& instance_id = std::nullopt);

}  // namespace citefusion
