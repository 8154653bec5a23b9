#include "strand/engine/execute.hpp"

#include "strand/core/errors.hpp"
#include "strand/core/windows.hpp"

#include <cmath>

namespace strand::engine {

ModelResult execute_instance(const ModelSpec& model, const ModelFunction& fn, Tick step, const ParameterVector& params,
                             std::span<const SeriesWindow> inputs, const ModelState* state) {
    const auto windows = step_windows(model, step);
    ModelCall call{model, step, params, inputs, windows.output, model.stateful ? state : nullptr};
    ModelResult raw;
    try {
        raw = fn(call);
    } catch (const ModelFailure&) {
        throw;
    } catch (const std::exception& e) {
        throw ModelFailure(model.id + "@" + std::to_string(step) + ": " + e.what());
    }

    ModelResult result;
    for (const auto& var : model.outputs) {
        const SeriesWindow* found = nullptr;
        for (const auto& o : raw.outputs) {
            if (o.variable == var.name) {
                found = &o;
                break;
            }
        }
        if (!found) {
            throw ModelFailure(model.id + "@" + std::to_string(step) + " did not produce '" + var.name + "'");
        }
        if (found->range() != windows.output || found->resolution != model.output_scope.resolution ||
            found->width != var.width || !found->well_formed()) {
            throw ModelFailure(model.id + "@" + std::to_string(step) + " output '" + var.name +
                               "' does not match its output scope");
        }
        for (double v : found->values) {
            if (!std::isfinite(v)) {
                throw ModelFailure(model.id + "@" + std::to_string(step) + " output '" + var.name +
                                   "' has non-finite values");
            }
        }
        result.outputs.push_back(*found);
    }
    if (raw.outputs.size() != model.outputs.size()) {
        throw ModelFailure(model.id + "@" + std::to_string(step) + " produced undeclared outputs");
    }
    if (model.stateful) {
        result.state = std::move(raw.state);
    }
    return result;
}

ModelResult execute_instance(const ModelSpec& model, const ModelRegistry& registry, Tick step,
                             const ParameterVector& params, std::span<const SeriesWindow> inputs,
                             const ModelState* state) {
    const auto* fn = registry.find(model.function_ref);
    if (!fn) {
        throw ModelFailure("function '" + model.function_ref + "' is not registered");
    }
    return execute_instance(model, *fn, step, params, inputs, state);
}

}  // namespace strand::engine
