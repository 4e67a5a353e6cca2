#pragma once

#include <iosfwd>
#include <string>

#include "teamopt/team_model.hpp"

namespace teamopt {

// Team specs round-trip through a versioned, human-readable structured-text
// config (JSON with explicit matrices and noise covariances). Numbers are
// emitted with full round-trip precision.
inline constexpr int kConfigSchemaVersion = 1;

std::string team_to_config(const TeamSpec& spec);
// Throws ValidationError on schema mismatch or malformed input.
TeamSpec team_from_config(const std::string& text);

void write_team_config(std::ostream& os, const TeamSpec& spec);
TeamSpec read_team_config(std::istream& is);

}  // namespace teamopt
