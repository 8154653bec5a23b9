#include "strand/timeline/predicates.hpp"

#include "strand/core/errors.hpp"

#include <algorithm>
#include <map>

namespace strand::timeline {

NodeSet resolve(const store::EnsembleGraph& graph, std::span<const std::string> ids) {
    NodeSet out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        out.push_back(graph.index_of(id));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool eligible(const store::EnsembleGraph& graph, std::size_t node) {
    return graph.node(node).status == store::InstanceStatus::ok;
}

namespace {

void check_range(const store::EnsembleGraph& graph, std::span<const std::size_t> nodes) {
    for (auto v : nodes) {
        if (v >= graph.size()) {
            throw UnknownInstance("instance index " + std::to_string(v) + " out of range");
        }
    }
}

bool consistent_unchecked(const store::EnsembleGraph& graph, std::span<const std::size_t> nodes) {
    std::map<std::string_view, std::vector<TickRange>> by_model;
    for (auto v : nodes) {
        const auto& n = graph.node(v);
        by_model[n.model_id].push_back(n.window);
    }
    for (auto& [model, windows] : by_model) {
        std::sort(windows.begin(), windows.end(), [](const TickRange& a, const TickRange& b) { return a.lo < b.lo; });
        for (std::size_t i = 1; i < windows.size(); ++i) {
            if (windows[i].lo < windows[i - 1].hi) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace

bool is_consistent(const store::EnsembleGraph& graph, std::span<const std::size_t> nodes) {
    check_range(graph, nodes);
    return consistent_unchecked(graph, nodes);
}

bool is_causally_closed(const store::EnsembleGraph& graph, std::span<const std::size_t> nodes) {
    check_range(graph, nodes);
    std::vector<char> in(graph.size(), 0);
    for (auto v : nodes) {
        in[v] = 1;
    }
    for (auto v : nodes) {
        for (auto p : graph.parents(v)) {
            if (!in[p]) {
                return false;
            }
        }
    }
    return true;
}

bool is_maximal(const store::EnsembleGraph& graph, std::span<const std::size_t> nodes) {
    if (!is_consistent(graph, nodes) || !is_causally_closed(graph, nodes)) {
        throw InconsistentInput("maximality is defined for consistent, causally closed sets only");
    }
    std::vector<char> in(graph.size(), 0);
    for (auto v : nodes) {
        in[v] = 1;
    }
    for (std::size_t v = 0; v < graph.size(); ++v) {
        if (in[v] || !eligible(graph, v)) {
            continue;
        }
        NodeSet grown(nodes.begin(), nodes.end());
        for (auto p : store::provenance(graph, v).nodes) {
            if (!in[p]) {
                grown.push_back(p);
            }
        }
        if (consistent_unchecked(graph, grown)) {
            return false;
        }
    }
    return true;
}

double jaccard(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.empty() && b.empty()) {
        return 1.0;
    }
    std::size_t common = 0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++common;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

}  // namespace strand::timeline
