#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace fred::schema {

// Validates `instance` against a JSON Schema restricted to the keywords the
// bundled schemas use: type, enum, properties, required,
// additionalProperties (boolean), items, minItems, maxItems, minimum and
// maximum. Unknown keywords are ignored. Returns one message per violation,
// each prefixed with the JSON pointer of the offending value.
std::vector<std::string> validate(const nlohmann::json& instance, const nlohmann::json& schema);

nlohmann::json load_schema(const std::string& path);

}  // namespace fred::schema
