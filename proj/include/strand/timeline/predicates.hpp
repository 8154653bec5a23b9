#pragma once

#include "strand/store/graph.hpp"

#include <span>
#include <string>
#include <vector>

namespace strand::timeline {

/// Node indices into an EnsembleGraph, ascending.
using NodeSet = std::vector<std::size_t>;

/// Resolves ids to a sorted NodeSet. Throws UnknownInstance.
NodeSet resolve(const store::EnsembleGraph& graph, std::span<const std::string> ids);

/// Nodes a timeline may contain: status ok.
bool eligible(const store::EnsembleGraph& graph, std::size_t node);

/// No two nodes of one model cover the same tick.
bool is_consistent(const store::EnsembleGraph& graph, std::span<const std::size_t> nodes);
/// Every data or state parent of a member is a member.
bool is_causally_closed(const store::EnsembleGraph& graph, std::span<const std::size_t> nodes);
/// No eligible node outside the set can be added together with its
/// provenance without breaking consistency. Throws InconsistentInput when
/// the set is not consistent and causally closed.
bool is_maximal(const store::EnsembleGraph& graph, std::span<const std::size_t> nodes);

/// |A ∩ B| / |A ∪ B|; 1 for two empty sets.
double jaccard(std::span<const std::size_t> a, std::span<const std::size_t> b);

}  // namespace strand::timeline
