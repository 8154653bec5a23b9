#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace strand::service {

struct SchemaError {
    /// JSON pointer into the instance, "" for the root.
    std::string path;
    std::string message;
};

/// Checks `instance` against a JSON Schema subset: type (including type
/// lists), properties, required, additionalProperties, items, minItems,
/// maxItems, enum, minimum, maximum and local "#/$defs/..." references
/// resolved against `root`.
std::vector<SchemaError> validate_schema(const nlohmann::json& schema, const nlohmann::json& instance,
                                         const nlohmann::json& root);

/// The published API schema document; each payload is a $defs entry.
const nlohmann::json& api_schemas();

/// Validates against api_schemas()["$defs"][name].
std::vector<SchemaError> validate_payload(const std::string& name, const nlohmann::json& instance);

}  // namespace strand::service
