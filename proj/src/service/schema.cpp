#include "strand/service/schema.hpp"

#include "strand/core/errors.hpp"

#include <cmath>

namespace strand::service {

using nlohmann::json;

namespace {

bool has_type(const json& v, const std::string& type) {
    if (type == "null") return v.is_null();
    if (type == "boolean") return v.is_boolean();
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "number") return v.is_number();
    if (type == "integer") {
        return v.is_number_integer() || (v.is_number_float() && std::trunc(v.get<double>()) == v.get<double>());
    }
    throw Error("unsupported schema type '" + type + "'");
}

std::string type_list(const json& t) {
    if (t.is_string()) {
        return t.get<std::string>();
    }
    std::string out;
    for (const auto& x : t) {
        out += (out.empty() ? "" : " or ") + x.get<std::string>();
    }
    return out;
}

std::string escape_pointer(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') {
            out += "~0";
        } else if (c == '/') {
            out += "~1";
        } else {
            out += c;
        }
    }
    return out;
}

void check(const json& schema, const json& v, const json& root, const std::string& path,
           std::vector<SchemaError>& errors) {
    if (schema.contains("$ref")) {
        const auto ref = schema.at("$ref").get<std::string>();
        const std::string prefix = "#/$defs/";
        if (ref.rfind(prefix, 0) != 0 || !root.contains("$defs") || !root.at("$defs").contains(ref.substr(prefix.size()))) {
            throw Error("unresolvable schema reference '" + ref + "'");
        }
        check(root.at("$defs").at(ref.substr(prefix.size())), v, root, path, errors);
        return;
    }
    if (schema.contains("type")) {
        const auto& t = schema.at("type");
        bool ok = false;
        if (t.is_string()) {
            ok = has_type(v, t.get<std::string>());
        } else {
            for (const auto& x : t) {
                ok = ok || has_type(v, x.get<std::string>());
            }
        }
        if (!ok) {
            errors.push_back({path, "expected " + type_list(t)});
            return;
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& e : schema.at("enum")) {
            found = found || e == v;
        }
        if (!found) {
            errors.push_back({path, "must be one of " + schema.at("enum").dump()});
        }
    }
    if (v.is_number()) {
        const double x = v.get<double>();
        if (schema.contains("minimum") && x < schema.at("minimum").get<double>()) {
            errors.push_back({path, "must be >= " + schema.at("minimum").dump()});
        }
        if (schema.contains("maximum") && x > schema.at("maximum").get<double>()) {
            errors.push_back({path, "must be <= " + schema.at("maximum").dump()});
        }
    }
    if (v.is_array()) {
        if (schema.contains("minItems") && v.size() < schema.at("minItems").get<std::size_t>()) {
            errors.push_back({path, "needs at least " + schema.at("minItems").dump() + " items"});
        }
        if (schema.contains("maxItems") && v.size() > schema.at("maxItems").get<std::size_t>()) {
            errors.push_back({path, "allows at most " + schema.at("maxItems").dump() + " items"});
        }
        if (schema.contains("items")) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                check(schema.at("items"), v[i], root, path + "/" + std::to_string(i), errors);
            }
        }
    }
    if (v.is_object()) {
        if (schema.contains("required")) {
            for (const auto& r : schema.at("required")) {
                if (!v.contains(r.get<std::string>())) {
                    errors.push_back({path + "/" + escape_pointer(r.get<std::string>()), "is required"});
                }
            }
        }
        const json empty = json::object();
        const auto& props = schema.contains("properties") ? schema.at("properties") : empty;
        for (const auto& [key, value] : v.items()) {
            const auto sub = path + "/" + escape_pointer(key);
            if (props.contains(key)) {
                check(props.at(key), value, root, sub, errors);
            } else if (schema.contains("additionalProperties")) {
                const auto& ap = schema.at("additionalProperties");
                if (ap.is_boolean()) {
                    if (!ap.get<bool>()) {
                        errors.push_back({sub, "is not an allowed field"});
                    }
                } else {
                    check(ap, value, root, sub, errors);
                }
            }
        }
    }
}

}  // namespace

std::vector<SchemaError> validate_schema(const json& schema, const json& instance, const json& root) {
    std::vector<SchemaError> errors;
    check(schema, instance, root, "", errors);
    return errors;
}

const json& api_schemas() {
    static const json doc = json::parse(R"json(
{
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "$id": "strand-api",
  "$defs": {
    "error": {
      "type": "object",
      "required": ["error"],
      "properties": {
        "error": {"type": "string"},
        "fields": {
          "type": "array",
          "items": {
            "type": "object",
            "required": ["path", "message"],
            "properties": {"path": {"type": "string"}, "message": {"type": "string"}},
            "additionalProperties": false
          }
        }
      },
      "additionalProperties": false
    },
    "window": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
    "run_summary": {
      "type": "object",
      "required": ["run_id", "flow_name", "horizon", "node_count", "edge_count", "status", "created_at", "diagnostic"],
      "properties": {
        "run_id": {"type": "string"},
        "flow_name": {"type": "string"},
        "horizon": {"type": "integer"},
        "node_count": {"type": "integer", "minimum": 0},
        "edge_count": {"type": "integer", "minimum": 0},
        "status": {"enum": ["running", "complete", "incomplete"]},
        "created_at": {"type": "string"},
        "diagnostic": {"type": "string"}
      },
      "additionalProperties": false
    },
    "run_list": {
      "type": "object",
      "required": ["runs"],
      "properties": {"runs": {"type": "array", "items": {"$ref": "#/$defs/run_summary"}}},
      "additionalProperties": false
    },
    "node": {
      "type": "object",
      "required": ["id", "model", "step", "window", "params", "status", "inputs_digest", "state_parent", "error"],
      "properties": {
        "id": {"type": "string"},
        "model": {"type": "string"},
        "step": {"type": "integer", "minimum": 0},
        "window": {"$ref": "#/$defs/window"},
        "params": {"type": "object", "additionalProperties": {"type": "number"}},
        "status": {"enum": ["ok", "failed", "dropped-child-source"]},
        "inputs_digest": {"type": "string"},
        "state_parent": {"type": ["string", "null"]},
        "error": {"type": "string"}
      },
      "additionalProperties": false
    },
    "edge": {
      "type": "object",
      "required": ["from", "to", "variable", "input_var", "window"],
      "properties": {
        "from": {"type": "string"},
        "to": {"type": "string"},
        "variable": {"type": "string"},
        "input_var": {"type": "string"},
        "window": {"$ref": "#/$defs/window"}
      },
      "additionalProperties": false
    },
    "graph_page": {
      "type": "object",
      "required": ["run_id", "page", "page_size", "total_nodes", "total_pages", "nodes", "edges"],
      "properties": {
        "run_id": {"type": "string"},
        "page": {"type": "integer", "minimum": 0},
        "page_size": {"type": "integer", "minimum": 1},
        "total_nodes": {"type": "integer", "minimum": 0},
        "total_pages": {"type": "integer", "minimum": 0},
        "nodes": {"type": "array", "items": {"$ref": "#/$defs/node"}},
        "edges": {"type": "array", "items": {"$ref": "#/$defs/edge"}}
      },
      "additionalProperties": false
    },
    "criterion": {
      "type": "object",
      "required": ["terms"],
      "properties": {
        "terms": {
          "type": "array",
          "minItems": 1,
          "items": {
            "type": "object",
            "required": ["model", "variable", "direction"],
            "properties": {
              "model": {"type": "string"},
              "variable": {"type": "string"},
              "direction": {"enum": ["maximize", "minimize", "match"]},
              "target": {"type": "array", "items": {"type": "number"}},
              "weight": {"type": "number"}
            },
            "additionalProperties": false
          }
        },
        "coverage_weight": {"type": "number"}
      },
      "additionalProperties": false
    },
    "diversity": {
      "type": "object",
      "required": ["k"],
      "properties": {
        "k": {"type": "integer", "minimum": 1},
        "lambda": {"type": "number", "minimum": 0, "maximum": 1},
        "beam_width": {"type": "integer", "minimum": 1}
      },
      "additionalProperties": false
    },
    "timeline_request": {
      "type": "object",
      "required": ["criterion", "diversity"],
      "properties": {
        "run_id": {"type": "string"},
        "criterion": {"$ref": "#/$defs/criterion"},
        "diversity": {"$ref": "#/$defs/diversity"}
      },
      "additionalProperties": false
    },
    "timeline_summary": {
      "type": "object",
      "required": ["timeline_id", "score", "coverage", "node_count"],
      "properties": {
        "timeline_id": {"type": "string"},
        "score": {"type": "number"},
        "coverage": {"type": "number", "minimum": 0, "maximum": 1},
        "node_count": {"type": "integer", "minimum": 0}
      },
      "additionalProperties": false
    },
    "extraction": {
      "type": "object",
      "required": ["request_id", "run_id", "status"],
      "properties": {
        "request_id": {"type": "string"},
        "run_id": {"type": "string"},
        "status": {"enum": ["complete", "computing"]},
        "timelines": {"type": "array", "items": {"$ref": "#/$defs/timeline_summary"}},
        "warning": {"type": "string"}
      },
      "additionalProperties": false
    },
    "series": {
      "type": "object",
      "required": ["variable", "t_start", "t_end", "resolution", "width", "ticks", "values", "downsampled"],
      "properties": {
        "variable": {"type": "string"},
        "t_start": {"type": "integer"},
        "t_end": {"type": "integer"},
        "resolution": {"type": "integer", "minimum": 1},
        "width": {"type": "integer", "minimum": 1},
        "ticks": {"type": "array", "items": {"type": "integer"}},
        "values": {"type": "array", "items": {"type": ["number", "null"]}},
        "downsampled": {"type": "boolean"}
      },
      "additionalProperties": false
    },
    "timeline_detail": {
      "type": "object",
      "required": ["timeline_id", "run_id", "node_ids", "score", "coverage", "series"],
      "properties": {
        "timeline_id": {"type": "string"},
        "run_id": {"type": "string"},
        "node_ids": {"type": "array", "items": {"type": "string"}},
        "score": {"type": "number"},
        "coverage": {"type": "number", "minimum": 0, "maximum": 1},
        "series": {
          "type": "object",
          "additionalProperties": {"type": "object", "additionalProperties": {"$ref": "#/$defs/series"}}
        }
      },
      "additionalProperties": false
    },
    "provenance": {
      "type": "object",
      "required": ["run_id", "instance_id", "nodes", "edges"],
      "properties": {
        "run_id": {"type": "string"},
        "instance_id": {"type": "string"},
        "nodes": {"type": "array", "items": {"$ref": "#/$defs/node"}},
        "edges": {"type": "array", "items": {"$ref": "#/$defs/edge"}}
      },
      "additionalProperties": false
    },
    "export_result": {
      "type": "object",
      "required": ["timeline_id", "run_id", "path"],
      "properties": {
        "timeline_id": {"type": "string"},
        "run_id": {"type": "string"},
        "path": {"type": "string"}
      },
      "additionalProperties": false
    }
  }
}
)json");
    return doc;
}

std::vector<SchemaError> validate_payload(const std::string& name, const json& instance) {
    const auto& root = api_schemas();
    if (!root.at("$defs").contains(name)) {
        throw Error("no published schema '" + name + "'");
    }
    return validate_schema(root.at("$defs").at(name), instance, root);
}

}  // namespace strand::service
