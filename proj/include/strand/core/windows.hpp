#pragma once

#include "strand/core/types.hpp"

#include <optional>

namespace strand {

struct StepWindows {
    std::optional<TickRange> input;
    TickRange output;

    friend bool operator==(const StepWindows&, const StepWindows&) = default;
};

/// Input and output windows of execution step `step` of an actor.
/// Sources read nothing and write [s*shift, s*shift + w_out); other actors
/// read [s*shift, s*shift + w_in) and write [s*shift, s*shift + w_out).
StepWindows step_windows(const ModelSpec& model, Tick step, bool is_source);

inline StepWindows step_windows(const ModelSpec& model, Tick step) {
    return step_windows(model, step, model.is_source());
}

/// Window an edge must read from its producer for consumer step `step`:
/// the consumer's input window shifted back by the edge lag.
TickRange required_producer_ticks(const ModelSpec& consumer, const FlowEdge& edge, Tick step);

}  // namespace strand
