#pragma once

#include "strand/engine/registry.hpp"

namespace strand::engine {

/// Runs one model simulation instance o <- F(p, d). Checks that every
/// declared output covers exactly out(step) at the output resolution and
/// returns them in declaration order; stateless models never return state.
/// Any exception from the function, or a malformed result, surfaces as
/// ModelFailure.
ModelResult execute_instance(const ModelSpec& model, const ModelFunction& fn, Tick step, const ParameterVector& params,
                             std::span<const SeriesWindow> inputs, const ModelState* state);

/// Same, resolving function_ref in `registry`.
ModelResult execute_instance(const ModelSpec& model, const ModelRegistry& registry, Tick step,
                             const ParameterVector& params, std::span<const SeriesWindow> inputs,
                             const ModelState* state);

}  // namespace strand::engine
