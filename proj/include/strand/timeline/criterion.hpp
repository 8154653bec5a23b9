#pragma once

#include "strand/core/types.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace strand::timeline {

enum class Direction { maximize, minimize, match };

const char* to_string(Direction d);

struct CriterionTerm {
    std::string model;
    std::string variable;
    Direction direction = Direction::maximize;
    /// Target profile for match, compared sample by sample.
    std::vector<double> target;
    double weight = 1.0;

    friend bool operator==(const CriterionTerm&, const CriterionTerm&) = default;
};

struct PreferenceCriterion {
    std::vector<CriterionTerm> terms;
    /// Weight of the timeline's (tick, model) coverage fraction.
    double coverage_weight = 0.0;

    /// Empty when the criterion is well formed, else the reason.
    std::string check() const;
    /// Throws UnknownVariable for terms naming absent models or outputs.
    void check_against(const FlowGraph& flow) const;

    friend bool operator==(const PreferenceCriterion&, const PreferenceCriterion&) = default;
};

/// YAML criterion file. Throws ParseError with line and column.
PreferenceCriterion parse_criterion(const std::string& text);
PreferenceCriterion load_criterion(const std::string& path);

nlohmann::json to_json(const PreferenceCriterion& c);
/// Throws Error naming the offending field.
PreferenceCriterion criterion_from_json(const nlohmann::json& j);

}  // namespace strand::timeline
