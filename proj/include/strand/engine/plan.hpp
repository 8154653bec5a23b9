#pragma once

#include "strand/core/types.hpp"
#include "strand/core/validate.hpp"
#include "strand/core/windows.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace strand::engine {

/// Producer ticks one upstream task supplies to a consumer input.
struct TaskSource {
    std::size_t task = 0;
    TickRange ticks;
};

struct TaskInput {
    std::size_t edge = 0;  ///< index into FlowGraph::edges
    /// Producer-time ticks to read: the input window shifted back by lag.
    TickRange required;
    /// Ordered by producer step; ticks before 0 are not listed.
    std::vector<TaskSource> sources;
};

struct Task {
    std::string model;
    Tick step = 0;
    StepWindows windows;
    /// One per model input, in declaration order.
    std::vector<TaskInput> inputs;
    /// Previous step of the same stateful model.
    std::optional<std::size_t> state_parent;
    /// Distinct upstream tasks, ascending.
    std::vector<std::size_t> deps;
    std::size_t stage = 0;
};

/// Time-unrolled flow: one task per (model, step) whose output window fits
/// the horizon, grouped into dependency stages.
struct ExecutionPlan {
    Tick horizon = 0;
    std::vector<Task> tasks;
    std::vector<std::vector<std::size_t>> stages;
    /// Tasks inside the horizon whose inputs need producer steps past it;
    /// they and their dependents are not scheduled.
    std::vector<std::pair<std::string, Tick>> truncated;

    std::optional<std::size_t> find(const std::string& model, Tick step) const;

private:
    friend ExecutionPlan compile_plan(const FlowGraph&, Tick);
    std::map<std::pair<std::string, Tick>, std::size_t> index_;
};

/// Throws InvalidFlow when validation fails and UnsatisfiableInput when an
/// input window has ticks no producer step can ever write.
ExecutionPlan compile_plan(const FlowGraph& flow, Tick horizon);

}  // namespace strand::engine
