#include "strand/core/windows.hpp"

namespace strand {

StepWindows step_windows(const ModelSpec& model, Tick step, bool is_source) {
    const Tick lo = step * model.shift;
    StepWindows w;
    w.output = {lo, lo + model.output_scope.window};
    if (!is_source) {
        w.input = TickRange{lo, lo + model.input_scope.window};
    }
    return w;
}

TickRange required_producer_ticks(const ModelSpec& consumer, const FlowEdge& edge, Tick step) {
    const Tick lo = step * consumer.shift;
    return TickRange{lo, lo + consumer.input_scope.window}.shifted(-edge.lag);
}

}  // namespace strand
