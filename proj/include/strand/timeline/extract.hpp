#pragma once

#include "strand/timeline/criterion.hpp"
#include "strand/timeline/predicates.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace strand::timeline {

inline constexpr std::size_t kDefaultOracleLimit = 24;
inline constexpr std::size_t kDefaultBeamWidth = 64;

struct Timeline {
    /// Content address of (run id, member ids, criterion).
    std::string id;
    std::string run_id;
    NodeSet nodes;
    /// Member ids in node order.
    std::vector<std::string> node_ids;
    double coverage = 0.0;
    double score = 0.0;
};

struct DiversityConfig {
    std::size_t k = 1;
    /// 0 = pure score, 1 = pure diversity.
    double lambda = 0.0;
    std::size_t beam_width = kDefaultBeamWidth;
    /// Graphs with at most this many nodes are searched without a beam
    /// limit, so the pool holds every timeline.
    std::size_t exact_limit = kDefaultOracleLimit;

    /// Empty when valid, else the reason.
    std::string check() const;
};

std::string timeline_id(const std::string& run_id, const std::vector<std::string>& node_ids,
                        const PreferenceCriterion& criterion);

/// Every maximal, consistent, causally closed set of eligible nodes, in
/// ascending lexicographic order of node-index lists. Throws TooLarge when
/// the graph has more than `limit` nodes.
std::vector<NodeSet> enumerate_timelines(const store::EnsembleGraph& graph, std::size_t limit = kDefaultOracleLimit);

/// Fraction of (tick, model) pairs in [0, horizon) x models covered by the set.
double coverage(const store::EnsembleGraph& graph, std::span<const std::size_t> nodes);

/// Weighted sum over criterion terms plus coverage_weight * coverage.
/// A term reads the concatenation, in window order, of the variable's
/// values over the set's instances of the term's model: maximize and
/// minimize give +/- its mean, match gives minus the mean squared deviation
/// from the target over their common length. Terms whose model has no
/// instance in the set contribute 0. Throws UnknownVariable.
double score_timeline(const store::EnsembleGraph& graph, std::span<const std::size_t> nodes,
                      const PreferenceCriterion& criterion);

Timeline make_timeline(const store::EnsembleGraph& graph, NodeSet nodes, const PreferenceCriterion& criterion);

/// Candidate pool from beam search over per-(model, step) branch choices,
/// then greedy maximal-marginal-relevance selection of up to k timelines.
std::vector<Timeline> extract_top_k(const store::EnsembleGraph& graph, const PreferenceCriterion& criterion,
                                    const DiversityConfig& diversity);

/// The beam-search pool alone, sorted by score (descending) then ids.
std::vector<Timeline> candidate_pool(const store::EnsembleGraph& graph, const PreferenceCriterion& criterion,
                                     const DiversityConfig& diversity);

/// MMR selection over a fixed pool.
std::vector<Timeline> select_mmr(std::vector<Timeline> pool, std::size_t k, double lambda);

/// The variable over the set's instances of `model`, spanning from the first
/// covered tick to the last at the model's output resolution. Uncovered
/// samples are NaN; on overlap the later step wins. Throws UnknownVariable.
SeriesWindow timeline_series(const store::EnsembleGraph& graph, std::span<const std::size_t> nodes,
                             const std::string& model, const std::string& variable);

}  // namespace strand::timeline
