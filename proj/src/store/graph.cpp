#include "strand/store/graph.hpp"

#include "strand/core/errors.hpp"

#include <algorithm>

namespace strand::store {

const char* to_string(InstanceStatus s) {
    switch (s) {
        case InstanceStatus::ok: return "ok";
        case InstanceStatus::failed: return "failed";
        case InstanceStatus::dropped_child_source: return "dropped-child-source";
    }
    return "ok";
}

InstanceStatus instance_status_from_string(const std::string& s) {
    if (s == "ok") return InstanceStatus::ok;
    if (s == "failed") return InstanceStatus::failed;
    if (s == "dropped-child-source") return InstanceStatus::dropped_child_source;
    throw Error("unknown instance status '" + s + "'");
}

const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::running: return "running";
        case RunStatus::complete: return "complete";
        case RunStatus::incomplete: return "incomplete";
    }
    return "incomplete";
}

RunStatus run_status_from_string(const std::string& s) {
    if (s == "running") return RunStatus::running;
    if (s == "complete") return RunStatus::complete;
    if (s == "incomplete") return RunStatus::incomplete;
    throw Error("unknown run status '" + s + "'");
}

const SeriesWindow* SimulationInstance::output(const std::string& variable) const {
    for (const auto& o : outputs) {
        if (o.variable == variable) {
            return &o;
        }
    }
    return nullptr;
}

EnsembleGraph::EnsembleGraph(std::string run_id, FlowGraph flow, Tick horizon)
    : run_id_(std::move(run_id)), flow_(std::move(flow)), horizon_(horizon) {}

void EnsembleGraph::set_status(RunStatus s, std::string diagnostic) {
    status_ = s;
    diagnostic_ = std::move(diagnostic);
}

std::optional<std::size_t> EnsembleGraph::find(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t EnsembleGraph::index_of(const std::string& id) const {
    if (auto i = find(id)) {
        return *i;
    }
    throw UnknownInstance("unknown instance '" + id + "'");
}

void EnsembleGraph::check_append(const SimulationInstance& instance, const std::vector<DataEdge>& parent_edges) const {
    if (by_id_.count(instance.id)) {
        throw DuplicateId("instance '" + instance.id + "' already exists");
    }
    for (const auto& e : parent_edges) {
        if (e.to != instance.id) {
            throw Error("edge " + e.from + " -> " + e.to + " does not target '" + instance.id + "'");
        }
        if (!by_id_.count(e.from)) {
            throw UnknownParent("instance '" + instance.id + "' cites absent parent '" + e.from + "'");
        }
    }
    if (instance.state_parent && !by_id_.count(*instance.state_parent)) {
        throw UnknownParent("instance '" + instance.id + "' cites absent state parent '" + *instance.state_parent +
                            "'");
    }
}

std::size_t EnsembleGraph::append(SimulationInstance instance, std::vector<DataEdge> parent_edges) {
    check_append(instance, parent_edges);
    std::vector<std::size_t> parents;
    for (const auto& e : parent_edges) {
        parents.push_back(by_id_.at(e.from));
    }
    if (instance.state_parent) {
        parents.push_back(by_id_.at(*instance.state_parent));
    }
    std::sort(parents.begin(), parents.end());
    parents.erase(std::unique(parents.begin(), parents.end()), parents.end());

    const std::size_t index = nodes_.size();
    by_id_.emplace(instance.id, index);
    nodes_.push_back(std::move(instance));
    children_.emplace_back();
    in_edges_.emplace_back();
    for (auto p : parents) {
        children_[p].push_back(index);
    }
    parents_.push_back(std::move(parents));
    for (auto& e : parent_edges) {
        in_edges_[index].push_back(edges_.size());
        edges_.push_back(std::move(e));
    }
    return index;
}

void EnsembleGraph::record_drop(DropRecord drop) { drops_.push_back(std::move(drop)); }

bool operator==(const EnsembleGraph& a, const EnsembleGraph& b) {
    return a.run_id_ == b.run_id_ && a.flow_ == b.flow_ && a.horizon_ == b.horizon_ && a.config_ == b.config_ &&
           a.status_ == b.status_ && a.diagnostic_ == b.diagnostic_ && a.nodes_ == b.nodes_ &&
           a.edges_ == b.edges_ && a.drops_ == b.drops_;
}

Provenance provenance(const EnsembleGraph& graph, const std::string& id) {
    return provenance(graph, graph.index_of(id));
}

Provenance provenance(const EnsembleGraph& graph, std::size_t index) {
    if (index >= graph.size()) {
        throw UnknownInstance("instance index " + std::to_string(index) + " out of range");
    }
    std::vector<char> seen(graph.size(), 0);
    std::vector<std::size_t> stack{index};
    seen[index] = 1;
    Provenance out;
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        out.nodes.push_back(v);
        for (auto p : graph.parents(v)) {
            if (!seen[p]) {
                seen[p] = 1;
                stack.push_back(p);
            }
        }
    }
    std::sort(out.nodes.begin(), out.nodes.end());
    for (auto v : out.nodes) {
        const auto& in = graph.in_edges(v);
        out.edges.insert(out.edges.end(), in.begin(), in.end());
    }
    std::sort(out.edges.begin(), out.edges.end());
    return out;
}

}  // namespace strand::store
