#pragma once

#include "strand/core/types.hpp"

#include <json.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace strand::store {

enum class InstanceStatus { ok, failed, dropped_child_source };

const char* to_string(InstanceStatus s);
InstanceStatus instance_status_from_string(const std::string& s);

/// One executed model simulation instance: model, parameters, consumed-data
/// digest, window and outputs.
struct SimulationInstance {
    std::string id;
    std::string model_id;
    Tick step = 0;
    ParameterVector params;
    TickRange window;
    std::string inputs_digest;
    std::vector<SeriesWindow> outputs;
    InstanceStatus status = InstanceStatus::ok;
    std::optional<std::string> state_parent;
    /// Failure message for status == failed.
    std::string error;

    const SeriesWindow* output(const std::string& variable) const;

    friend bool operator==(const SimulationInstance&, const SimulationInstance&) = default;
};

/// Data handed from `from` to `to`: producer output `variable` over
/// producer ticks `window`, bound to consumer input `input_var`.
struct DataEdge {
    std::string from;
    std::string to;
    std::string variable;
    std::string input_var;
    TickRange window;

    friend bool operator==(const DataEdge&, const DataEdge&) = default;
};

/// An input group the sampling manager discarded before branching.
struct DropRecord {
    std::string model_id;
    Tick step = 0;
    std::vector<std::string> parents;
    double score = 0.0;

    friend bool operator==(const DropRecord&, const DropRecord&) = default;
};

enum class RunStatus { running, complete, incomplete };

const char* to_string(RunStatus s);
RunStatus run_status_from_string(const std::string& s);

/// Append-only provenance DAG of one ensemble run. Parents always precede
/// children, so insertion order is a topological order.
class EnsembleGraph {
public:
    EnsembleGraph() = default;
    EnsembleGraph(std::string run_id, FlowGraph flow, Tick horizon);

    /// Adds an instance and its incoming data edges. Throws DuplicateId when
    /// the id exists and UnknownParent when an edge source or the state
    /// parent is absent. Returns the new node index.
    std::size_t append(SimulationInstance instance, std::vector<DataEdge> parent_edges);
    /// The checks append performs, without mutating.
    void check_append(const SimulationInstance& instance, const std::vector<DataEdge>& parent_edges) const;
    void record_drop(DropRecord drop);

    const std::string& run_id() const noexcept { return run_id_; }
    const FlowGraph& flow() const noexcept { return flow_; }
    Tick horizon() const noexcept { return horizon_; }
    const nlohmann::json& config() const noexcept { return config_; }
    void set_config(nlohmann::json config) { config_ = std::move(config); }

    RunStatus status() const noexcept { return status_; }
    void set_status(RunStatus s, std::string diagnostic = {});
    const std::string& diagnostic() const noexcept { return diagnostic_; }

    std::size_t size() const noexcept { return nodes_.size(); }
    bool empty() const noexcept { return nodes_.empty(); }
    std::span<const SimulationInstance> nodes() const noexcept { return nodes_; }
    std::span<const DataEdge> edges() const noexcept { return edges_; }
    std::span<const DropRecord> drops() const noexcept { return drops_; }

    const SimulationInstance& node(std::size_t index) const { return nodes_.at(index); }
    std::optional<std::size_t> find(const std::string& id) const;
    /// Throws UnknownInstance.
    std::size_t index_of(const std::string& id) const;

    /// Distinct data and state parents, ascending.
    const std::vector<std::size_t>& parents(std::size_t index) const { return parents_.at(index); }
    const std::vector<std::size_t>& children(std::size_t index) const { return children_.at(index); }
    /// Edge indices whose target is `index`.
    const std::vector<std::size_t>& in_edges(std::size_t index) const { return in_edges_.at(index); }

    friend bool operator==(const EnsembleGraph& a, const EnsembleGraph& b);

private:
    std::string run_id_;
    FlowGraph flow_;
    Tick horizon_ = 0;
    nlohmann::json config_ = nlohmann::json::object();
    RunStatus status_ = RunStatus::running;
    std::string diagnostic_;

    std::vector<SimulationInstance> nodes_;
    std::vector<DataEdge> edges_;
    std::vector<DropRecord> drops_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::vector<std::size_t>> in_edges_;
};

/// Ancestor closure of one instance, including itself.
struct Provenance {
    /// Ascending node indices (topological).
    std::vector<std::size_t> nodes;
    /// Edge indices among those nodes.
    std::vector<std::size_t> edges;
};

/// Throws UnknownInstance.
Provenance provenance(const EnsembleGraph& graph, const std::string& id);
Provenance provenance(const EnsembleGraph& graph, std::size_t index);

}  // namespace strand::store
