#include "strand/core/flow_io.hpp"

#include "strand/core/errors.hpp"
#include "strand/core/yaml_fields.hpp"

#include <cmath>
#include <limits>
#include <regex>

namespace strand {

using nlohmann::json;

std::string kind_label(const VariableSpec& v) {
    return v.kind == VariableKind::scalar ? "scalar" : "vector[" + std::to_string(v.width) + "]";
}

namespace {

VariableSpec parse_variable(const YAML::Node& node, const std::string& path) {
    yaml::Fields f(node, path, {"name", "kind", "unit"});
    VariableSpec v;
    v.name = yaml::as_string(f.need("name"), f.path("name"));
    if (f.has("kind")) {
        const auto kind = yaml::as_string(f.get("kind"), f.path("kind"));
        static const std::regex vec(R"(vector\[([1-9][0-9]*)\])");
        std::smatch m;
        if (kind == "scalar") {
            v.kind = VariableKind::scalar;
            v.width = 1;
        } else if (std::regex_match(kind, m, vec)) {
            v.kind = VariableKind::vector;
            v.width = std::stoi(m[1].str());
        } else {
            yaml::fail(f.get("kind"), "'" + f.path("kind") + "' must be 'scalar' or 'vector[n]'");
        }
    }
    if (f.has("unit")) {
        v.unit = yaml::as_string(f.get("unit"), f.path("unit"));
    }
    return v;
}

ParameterSpec parse_parameter(const YAML::Node& node, const std::string& path) {
    yaml::Fields f(node, path, {"name", "domain"});
    ParameterSpec p;
    p.name = yaml::as_string(f.need("name"), f.path("name"));
    yaml::Fields d(f.need("domain"), f.path("domain"), {"continuous", "discrete"});
    if (d.has("continuous") == d.has("discrete")) {
        yaml::fail(d.node(), "'" + f.path("domain") + "' needs exactly one of 'continuous' or 'discrete'");
    }
    if (d.has("continuous")) {
        yaml::Fields c(d.get("continuous"), d.path("continuous"), {"lo", "hi"});
        p.domain = ContinuousDomain{yaml::as_double(c.need("lo"), c.path("lo")),
                                    yaml::as_double(c.need("hi"), c.path("hi"))};
    } else {
        const auto list = d.get("discrete");
        if (!list.IsSequence()) {
            yaml::fail(list, "'" + d.path("discrete") + "' must be a list of numbers");
        }
        DiscreteDomain dd;
        for (std::size_t i = 0; i < list.size(); ++i) {
            dd.values.push_back(yaml::as_double(list[i], d.path("discrete") + "[" + std::to_string(i) + "]"));
        }
        p.domain = std::move(dd);
    }
    return p;
}

ScopeDescriptor parse_scope(const YAML::Node& node, const std::string& path) {
    yaml::Fields f(node, path, {"window", "resolution"});
    ScopeDescriptor s;
    s.window = yaml::as_int(f.need("window"), f.path("window"));
    s.resolution = f.has("resolution") ? yaml::as_int(f.get("resolution"), f.path("resolution")) : 1;
    return s;
}

template <typename T, typename Fn>
std::vector<T> parse_list(const yaml::Fields& f, const std::string& key, Fn&& parse_item) {
    std::vector<T> out;
    if (!f.has(key)) {
        return out;
    }
    const auto list = f.get(key);
    if (!list.IsSequence()) {
        yaml::fail(list, "'" + f.path(key) + "' must be a list");
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
        out.push_back(parse_item(list[i], f.path(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
}

ModelSpec parse_model(const YAML::Node& node, const std::string& path) {
    yaml::Fields f(node, path,
                   {"id", "function_ref", "params", "inputs", "outputs", "input_scope", "output_scope", "shift",
                    "stateful"});
    ModelSpec m;
    m.id = yaml::as_string(f.need("id"), f.path("id"));
    m.function_ref = yaml::as_string(f.need("function_ref"), f.path("function_ref"));
    m.params = parse_list<ParameterSpec>(f, "params", parse_parameter);
    m.inputs = parse_list<VariableSpec>(f, "inputs", parse_variable);
    m.outputs = parse_list<VariableSpec>(f, "outputs", parse_variable);
    if (f.has("input_scope")) {
        m.input_scope = parse_scope(f.get("input_scope"), f.path("input_scope"));
    } else if (!m.inputs.empty()) {
        yaml::fail(node, "missing required field '" + f.path("input_scope") + "'");
    }
    m.output_scope = parse_scope(f.need("output_scope"), f.path("output_scope"));
    m.shift = yaml::as_int(f.need("shift"), f.path("shift"));
    m.stateful = f.has("stateful") && yaml::as_bool(f.get("stateful"), f.path("stateful"));
    return m;
}

FlowEdge parse_edge(const YAML::Node& node, const std::string& path) {
    yaml::Fields f(node, path, {"from_node", "output_var", "to_node", "input_var", "lag", "initial"});
    FlowEdge e;
    e.from_node = yaml::as_string(f.need("from_node"), f.path("from_node"));
    e.output_var = yaml::as_string(f.need("output_var"), f.path("output_var"));
    e.to_node = yaml::as_string(f.need("to_node"), f.path("to_node"));
    e.input_var = yaml::as_string(f.need("input_var"), f.path("input_var"));
    e.lag = f.has("lag") ? yaml::as_int(f.get("lag"), f.path("lag")) : 0;
    e.initial = f.has("initial") ? yaml::as_double(f.get("initial"), f.path("initial")) : 0.0;
    return e;
}

}  // namespace

FlowGraph parse_flow(const std::string& text) {
    const auto doc = yaml::parse_document(text);
    yaml::Fields f(doc, "", {"name", "models", "edges"});
    FlowGraph flow;
    flow.name = f.has("name") ? yaml::as_string(f.get("name"), "name") : "flow";
    const auto models = f.need("models");
    if (!models.IsSequence()) {
        yaml::fail(models, "'models' must be a list");
    }
    for (std::size_t i = 0; i < models.size(); ++i) {
        auto m = parse_model(models[i], "models[" + std::to_string(i) + "]");
        if (flow.nodes.count(m.id)) {
            yaml::fail(models[i], "duplicate model id '" + m.id + "'");
        }
        flow.nodes.emplace(m.id, std::move(m));
    }
    flow.edges = parse_list<FlowEdge>(f, "edges", parse_edge);
    return flow;
}

FlowGraph load_flow(const std::string& path) { return parse_flow(yaml::read_text(path)); }

json to_json(const ModelSpec& m) {
    json params = json::array();
    for (const auto& p : m.params) {
        json domain;
        if (const auto* c = std::get_if<ContinuousDomain>(&p.domain)) {
            domain["continuous"] = {{"lo", c->lo}, {"hi", c->hi}};
        } else {
            domain["discrete"] = std::get<DiscreteDomain>(p.domain).values;
        }
        params.push_back({{"name", p.name}, {"domain", domain}});
    }
    auto vars = [](const std::vector<VariableSpec>& vs) {
        json out = json::array();
        for (const auto& v : vs) {
            out.push_back({{"name", v.name}, {"kind", kind_label(v)}, {"unit", v.unit}});
        }
        return out;
    };
    return {{"id", m.id},
            {"function_ref", m.function_ref},
            {"params", params},
            {"inputs", vars(m.inputs)},
            {"outputs", vars(m.outputs)},
            {"input_scope", {{"window", m.input_scope.window}, {"resolution", m.input_scope.resolution}}},
            {"output_scope", {{"window", m.output_scope.window}, {"resolution", m.output_scope.resolution}}},
            {"shift", m.shift},
            {"stateful", m.stateful}};
}

json to_json(const FlowGraph& flow) {
    json models = json::array();
    for (const auto& [_, m] : flow.nodes) {
        models.push_back(to_json(m));
    }
    json edges = json::array();
    for (const auto& e : flow.edges) {
        edges.push_back({{"from_node", e.from_node},
                         {"output_var", e.output_var},
                         {"to_node", e.to_node},
                         {"input_var", e.input_var},
                         {"lag", e.lag},
                         {"initial", e.initial}});
    }
    return {{"name", flow.name}, {"models", models}, {"edges", edges}};
}

FlowGraph flow_from_json(const json& j) {
    // JSON is a YAML subset, so the strict parser does the work.
    return parse_flow(j.dump());
}

json to_json(const SeriesWindow& s) {
    json values = json::array();
    for (double v : s.values) {
        values.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    }
    return {{"variable", s.variable},
            {"t_start", s.t_start},
            {"t_end", s.t_end},
            {"resolution", s.resolution},
            {"width", s.width},
            {"values", values}};
}

SeriesWindow series_from_json(const json& j) {
    SeriesWindow s;
    s.variable = j.at("variable").get<std::string>();
    s.t_start = j.at("t_start").get<Tick>();
    s.t_end = j.at("t_end").get<Tick>();
    s.resolution = j.at("resolution").get<Tick>();
    s.width = j.value("width", 1);
    for (const auto& v : j.at("values")) {
        s.values.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
    }
    return s;
}

}  // namespace strand
