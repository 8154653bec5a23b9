#pragma once

#include "strand/core/types.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace strand {

enum class ViolationCode {
    invalid_model,
    unknown_function,
    invalid_parameter,
    invalid_scope,
    duplicate_variable,
    unknown_node,
    unknown_variable,
    kind_mismatch,
    invalid_lag,
    unfed_input,
    multiply_fed_input,
    zero_lag_cycle,
    coverage_gap,
    unrolled_cycle,
};

/// Stable human-readable tag, e.g. "zero-lag cycle".
const char* to_string(ViolationCode code);

struct Violation {
    ViolationCode code;
    /// Node id, "from.var -> to.var" edge label, or cycle listing.
    std::string subject;
    std::string message;
};

using ValidationReport = std::vector<Violation>;

/// Checks every FlowGraph invariant plus schedulability. An empty report
/// means the flow compiles into an execution plan for any horizon.
/// When `known_functions` is given, function_ref must name one of them.
ValidationReport validate_flow(const FlowGraph& flow,
                               const std::set<std::string>* known_functions = nullptr);

std::string format_report(const ValidationReport& report);

/// Contiguous ticks supplied by one producer step.
struct TickSource {
    Tick step = 0;
    TickRange ticks;

    friend bool operator==(const TickSource&, const TickSource&) = default;
};

struct ProducerCoverage {
    /// Ordered by step; each tick of the request belongs to exactly one source.
    std::vector<TickSource> sources;
    /// Ticks no producer step can supply.
    std::vector<Tick> missing;
};

/// Resolves which producer steps supply each tick of `ticks` (ticks < 0 are
/// ignored). A tick comes from the latest step whose whole output window lies
/// inside `ticks`; failing that, from the latest step covering it. Only steps
/// whose output window ends at or before `horizon` are considered.
ProducerCoverage resolve_producers(const ModelSpec& producer, TickRange ticks,
                                   std::optional<Tick> horizon);

}  // namespace strand
