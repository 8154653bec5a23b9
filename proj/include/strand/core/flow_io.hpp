#pragma once

#include "strand/core/types.hpp"

#include <json.hpp>

#include <string>

namespace strand {

/// Parses a flow-spec document (YAML; JSON is accepted as a subset).
/// Unknown fields and type errors raise a line-anchored ParseError.
FlowGraph parse_flow(const std::string& text);
FlowGraph load_flow(const std::string& path);

nlohmann::json to_json(const FlowGraph& flow);
nlohmann::json to_json(const ModelSpec& model);
FlowGraph flow_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SeriesWindow& series);
SeriesWindow series_from_json(const nlohmann::json& j);

/// "scalar" or "vector[n]".
std::string kind_label(const VariableSpec& v);

}  // namespace strand
