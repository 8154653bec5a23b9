#include "strand/timeline/criterion.hpp"

#include "strand/core/errors.hpp"
#include "strand/core/yaml_fields.hpp"

#include <cmath>

namespace strand::timeline {

using nlohmann::json;

const char* to_string(Direction d) {
    switch (d) {
        case Direction::maximize: return "maximize";
        case Direction::minimize: return "minimize";
        case Direction::match: return "match";
    }
    return "maximize";
}

namespace {

std::optional<Direction> direction_from(const std::string& s) {
    if (s == "maximize") return Direction::maximize;
    if (s == "minimize") return Direction::minimize;
    if (s == "match") return Direction::match;
    return std::nullopt;
}

}  // namespace

std::string PreferenceCriterion::check() const {
    if (terms.empty()) {
        return "at least one term is required";
    }
    if (!std::isfinite(coverage_weight)) {
        return "coverage_weight must be finite";
    }
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto& t = terms[i];
        const auto where = "terms[" + std::to_string(i) + "]";
        if (!std::isfinite(t.weight)) {
            return where + ".weight must be finite";
        }
        if (t.direction == Direction::match && t.target.empty()) {
            return where + ".target is required for match";
        }
        if (t.direction != Direction::match && !t.target.empty()) {
            return where + ".target is only valid for match";
        }
        for (auto v : t.target) {
            if (!std::isfinite(v)) {
                return where + ".target values must be finite";
            }
        }
    }
    return {};
}

void PreferenceCriterion::check_against(const FlowGraph& flow) const {
    for (const auto& t : terms) {
        const auto* m = flow.find_model(t.model);
        if (!m) {
            throw UnknownVariable("criterion names unknown model '" + t.model + "'");
        }
        if (!m->find_output(t.variable)) {
            throw UnknownVariable("model '" + t.model + "' has no output '" + t.variable + "'");
        }
    }
}

PreferenceCriterion parse_criterion(const std::string& text) {
    const auto doc = yaml::parse_document(text);
    yaml::Fields f(doc, "", {"terms", "coverage_weight"});
    PreferenceCriterion c;
    const auto terms = f.need("terms");
    if (!terms.IsSequence()) {
        yaml::fail(terms, "'terms' must be a list");
    }
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto path = "terms[" + std::to_string(i) + "]";
        yaml::Fields t(terms[i], path, {"model", "variable", "direction", "target", "weight"});
        CriterionTerm term;
        term.model = yaml::as_string(t.need("model"), t.path("model"));
        term.variable = yaml::as_string(t.need("variable"), t.path("variable"));
        const auto dir = yaml::as_string(t.need("direction"), t.path("direction"));
        const auto d = direction_from(dir);
        if (!d) {
            yaml::fail(t.get("direction"), "'" + t.path("direction") + "' must be maximize, minimize or match");
        }
        term.direction = *d;
        if (t.has("target")) {
            const auto target = t.get("target");
            if (!target.IsSequence()) {
                yaml::fail(target, "'" + t.path("target") + "' must be a list of numbers");
            }
            for (std::size_t k = 0; k < target.size(); ++k) {
                term.target.push_back(yaml::as_double(target[k], t.path("target") + "[" + std::to_string(k) + "]"));
            }
        }
        if (t.has("weight")) {
            term.weight = yaml::as_double(t.get("weight"), t.path("weight"));
        }
        c.terms.push_back(std::move(term));
    }
    if (f.has("coverage_weight")) {
        c.coverage_weight = yaml::as_double(f.get("coverage_weight"), "coverage_weight");
    }
    if (auto why = c.check(); !why.empty()) {
        yaml::fail(doc, why);
    }
    return c;
}

PreferenceCriterion load_criterion(const std::string& path) { return parse_criterion(yaml::read_text(path)); }

json to_json(const PreferenceCriterion& c) {
    json terms = json::array();
    for (const auto& t : c.terms) {
        json j = {{"model", t.model}, {"variable", t.variable}, {"direction", to_string(t.direction)}, {"weight", t.weight}};
        if (t.direction == Direction::match) {
            j["target"] = t.target;
        }
        terms.push_back(std::move(j));
    }
    return {{"terms", terms}, {"coverage_weight", c.coverage_weight}};
}

PreferenceCriterion criterion_from_json(const json& j) {
    auto fail = [](const std::string& field, const std::string& msg) -> Error {
        return Error("criterion." + field + ": " + msg);
    };
    if (!j.is_object()) {
        throw fail("", "must be an object");
    }
    PreferenceCriterion c;
    if (!j.contains("terms") || !j.at("terms").is_array()) {
        throw fail("terms", "required list");
    }
    const auto& terms = j.at("terms");
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto& t = terms[i];
        const auto path = "terms[" + std::to_string(i) + "]";
        if (!t.is_object()) {
            throw fail(path, "must be an object");
        }
        CriterionTerm term;
        for (const char* key : {"model", "variable", "direction"}) {
            if (!t.contains(key) || !t.at(key).is_string()) {
                throw fail(path + "." + key, "required string");
            }
        }
        term.model = t.at("model").get<std::string>();
        term.variable = t.at("variable").get<std::string>();
        const auto d = direction_from(t.at("direction").get<std::string>());
        if (!d) {
            throw fail(path + ".direction", "must be maximize, minimize or match");
        }
        term.direction = *d;
        if (t.contains("target")) {
            if (!t.at("target").is_array()) {
                throw fail(path + ".target", "must be a list of numbers");
            }
            for (const auto& v : t.at("target")) {
                if (!v.is_number()) {
                    throw fail(path + ".target", "must be a list of numbers");
                }
                term.target.push_back(v.get<double>());
            }
        }
        if (t.contains("weight")) {
            if (!t.at("weight").is_number()) {
                throw fail(path + ".weight", "must be a number");
            }
            term.weight = t.at("weight").get<double>();
        }
        c.terms.push_back(std::move(term));
    }
    if (j.contains("coverage_weight")) {
        if (!j.at("coverage_weight").is_number()) {
            throw fail("coverage_weight", "must be a number");
        }
        c.coverage_weight = j.at("coverage_weight").get<double>();
    }
    if (auto why = c.check(); !why.empty()) {
        throw Error("criterion: " + why);
    }
    return c;
}

}  // namespace strand::timeline
