#pragma once

#include <string>

#include "moebius/records.hpp"
#include "moebius/types.hpp"

namespace moebius {

// Parses a run configuration. Every key is optional (defaults apply) but
// unknown keys are rejected; the domain lives under "domain".
RunConfig config_from_json(const Json& j);
RunConfig config_from_text(const std::string& text);
Json to_json(const RunConfig& cfg);

Json to_json(const DomainSpec& spec);
DomainSpec domain_from_json(const Json& j, const std::string& path = "domain");

// Checks every range invariant; throws ConfigError naming the field.
void validate(const RunConfig& cfg);

std::string to_string(BaselineMode mode);
std::string ablation_name(const AblationMode& mode);
AblationMode ablation_from_name(const std::string& name);

}  // namespace moebius
