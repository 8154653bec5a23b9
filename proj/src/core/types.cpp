#include "strand/core/types.hpp"

#include "strand/core/errors.hpp"

#include <algorithm>
#include <cmath>

namespace strand {

bool ParameterSpec::admits(double value) const {
    if (const auto* c = std::get_if<ContinuousDomain>(&domain)) {
        return std::isfinite(value) && value >= c->lo && value <= c->hi;
    }
    const auto& d = std::get<DiscreteDomain>(domain);
    return std::find(d.values.begin(), d.values.end(), value) != d.values.end();
}

namespace {

template <typename Spec>
const Spec* find_named(const std::vector<Spec>& specs, const std::string& name) {
    auto it = std::find_if(specs.begin(), specs.end(), [&](const Spec& s) { return s.name == name; });
    return it == specs.end() ? nullptr : &*it;
}

}  // namespace

const VariableSpec* ModelSpec::find_input(const std::string& name) const { return find_named(inputs, name); }
const VariableSpec* ModelSpec::find_output(const std::string& name) const { return find_named(outputs, name); }
const ParameterSpec* ModelSpec::find_param(const std::string& name) const { return find_named(params, name); }

const ModelSpec& FlowGraph::model(const std::string& id) const {
    if (const auto* m = find_model(id)) {
        return *m;
    }
    throw InvalidFlow("unknown model '" + id + "'");
}

const ModelSpec* FlowGraph::find_model(const std::string& id) const {
    auto it = nodes.find(id);
    return it == nodes.end() ? nullptr : &it->second;
}

std::vector<const FlowEdge*> FlowGraph::incoming(const std::string& to) const {
    std::vector<const FlowEdge*> out;
    for (const auto& e : edges) {
        if (e.to_node == to) {
            out.push_back(&e);
        }
    }
    return out;
}

const FlowEdge* FlowGraph::feeding(const std::string& to, const std::string& input_var) const {
    for (const auto& e : edges) {
        if (e.to_node == to && e.input_var == input_var) {
            return &e;
        }
    }
    return nullptr;
}

double SeriesWindow::at_tick(Tick t, int c) const {
    if (t < t_start || t >= t_end || c < 0 || c >= width) {
        throw CoverageGap("tick " + std::to_string(t) + " outside series '" + variable + "' [" +
                          std::to_string(t_start) + "," + std::to_string(t_end) + ")");
    }
    const auto sample = static_cast<std::size_t>((t - t_start) / resolution);
    return values[sample * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)];
}

bool SeriesWindow::well_formed() const noexcept {
    return t_start < t_end && resolution > 0 && width > 0 && (t_end - t_start) % resolution == 0 &&
           values.size() == static_cast<std::size_t>(sample_count()) * static_cast<std::size_t>(width);
}

}  // namespace strand
