#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace strand {

/// Simulation time is an integer tick axis starting at 0.
using Tick = std::int64_t;

/// Half-open tick interval [lo, hi).
struct TickRange {
    Tick lo = 0;
    Tick hi = 0;

    Tick length() const noexcept { return hi - lo; }
    bool empty() const noexcept { return hi <= lo; }
    bool contains(Tick t) const noexcept { return t >= lo && t < hi; }
    bool contains(const TickRange& o) const noexcept { return o.lo >= lo && o.hi <= hi; }
    bool intersects(const TickRange& o) const noexcept { return lo < o.hi && o.lo < hi; }
    TickRange shifted(Tick by) const noexcept { return {lo + by, hi + by}; }

    friend bool operator==(const TickRange&, const TickRange&) = default;
    friend auto operator<=>(const TickRange&, const TickRange&) = default;
};

enum class VariableKind { scalar, vector };

struct VariableSpec {
    std::string name;
    VariableKind kind = VariableKind::scalar;
    /// Components per sample: 1 for scalars, n for vector[n].
    int width = 1;
    std::string unit;

    friend bool operator==(const VariableSpec&, const VariableSpec&) = default;
};

struct ContinuousDomain {
    double lo = 0.0;
    double hi = 1.0;
    friend bool operator==(const ContinuousDomain&, const ContinuousDomain&) = default;
};

struct DiscreteDomain {
    std::vector<double> values;
    friend bool operator==(const DiscreteDomain&, const DiscreteDomain&) = default;
};

struct ParameterSpec {
    std::string name;
    std::variant<ContinuousDomain, DiscreteDomain> domain;

    bool is_continuous() const noexcept { return std::holds_alternative<ContinuousDomain>(domain); }
    bool admits(double value) const;

    friend bool operator==(const ParameterSpec&, const ParameterSpec&) = default;
};

struct ScopeDescriptor {
    Tick window = 0;
    Tick resolution = 1;

    Tick samples() const noexcept { return resolution > 0 ? window / resolution : 0; }
    friend bool operator==(const ScopeDescriptor&, const ScopeDescriptor&) = default;
};

struct ModelSpec {
    std::string id;
    std::string function_ref;
    std::vector<ParameterSpec> params;
    std::vector<VariableSpec> inputs;
    std::vector<VariableSpec> outputs;
    ScopeDescriptor input_scope;
    ScopeDescriptor output_scope;
    Tick shift = 1;
    bool stateful = false;

    bool is_source() const noexcept { return inputs.empty(); }
    const VariableSpec* find_input(const std::string& name) const;
    const VariableSpec* find_output(const std::string& name) const;
    const ParameterSpec* find_param(const std::string& name) const;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Connects an output variable of one model to an input variable of another.
/// A lag-L edge feeds consumer window [lo, hi) with producer data from
/// [lo - L, hi - L); ticks before 0 read `initial`.
struct FlowEdge {
    std::string from_node;
    std::string output_var;
    std::string to_node;
    std::string input_var;
    Tick lag = 0;
    double initial = 0.0;

    friend bool operator==(const FlowEdge&, const FlowEdge&) = default;
};

struct FlowGraph {
    std::string name;
    std::map<std::string, ModelSpec> nodes;
    std::vector<FlowEdge> edges;

    const ModelSpec& model(const std::string& id) const;
    const ModelSpec* find_model(const std::string& id) const;
    /// Edges whose consumer is `to`, in declaration order.
    std::vector<const FlowEdge*> incoming(const std::string& to) const;
    /// The edge feeding `to`.`input_var`, if any.
    const FlowEdge* feeding(const std::string& to, const std::string& input_var) const;

    friend bool operator==(const FlowGraph&, const FlowGraph&) = default;
};

/// A window of samples for one variable. Sample j covers ticks
/// [t_start + j*resolution, t_start + (j+1)*resolution) and occupies
/// values[j*width, (j+1)*width).
struct SeriesWindow {
    std::string variable;
    Tick t_start = 0;
    Tick t_end = 0;
    Tick resolution = 1;
    int width = 1;
    std::vector<double> values;

    TickRange range() const noexcept { return {t_start, t_end}; }
    Tick sample_count() const noexcept { return resolution > 0 ? (t_end - t_start) / resolution : 0; }
    /// Component `c` of the sample covering tick t.
    double at_tick(Tick t, int c = 0) const;
    bool well_formed() const noexcept;

    friend bool operator==(const SeriesWindow&, const SeriesWindow&) = default;
};

/// One assignment per parameter of the owning model.
using ParameterVector = std::map<std::string, double>;

}  // namespace strand
