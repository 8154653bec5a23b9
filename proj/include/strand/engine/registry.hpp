#pragma once

#include "strand/core/types.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace strand::engine {

/// Opaque state a stateful model threads from one step of a scenario branch
/// to the next.
using ModelState = std::vector<double>;

struct ModelCall {
    const ModelSpec& model;
    Tick step;
    const ParameterVector& params;
    /// Aligned to the model's input scope, in declaration order.
    std::span<const SeriesWindow> inputs;
    TickRange output_window;
    /// Previous step's state on this branch; null at the first step.
    const ModelState* state;

    /// Input by variable name; throws ModelFailure when absent.
    const SeriesWindow& input(const std::string& name) const;
    /// Parameter by name; throws ModelFailure when absent.
    double param(const std::string& name) const;
};

struct ModelResult {
    std::vector<SeriesWindow> outputs;
    std::optional<ModelState> state;
};

using ModelFunction = std::function<ModelResult(const ModelCall&)>;

/// Maps function_ref names to simulation functions.
class ModelRegistry {
public:
    void add(const std::string& name, ModelFunction fn);
    const ModelFunction* find(const std::string& name) const;
    std::set<std::string> names() const;

    /// Registry holding the built-in "identity" model (output i := input i).
    static ModelRegistry with_builtins();

private:
    std::map<std::string, ModelFunction> functions_;
};

}  // namespace strand::engine
