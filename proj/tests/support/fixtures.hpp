#pragma once

#include "strand/store/graph.hpp"
#include "strand/timeline/criterion.hpp"

#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace strand::testing {

ModelSpec make_model(const std::string& id, std::vector<std::string> inputs, std::vector<std::string> outputs,
                     Tick window, Tick shift, bool stateful = false);

SeriesWindow constant_series(const std::string& variable, TickRange window, double value, Tick resolution = 1);

/// Appends hand-built instances; ids are model:step:ordinal.
class GraphBuilder {
public:
    GraphBuilder(FlowGraph flow, Tick horizon, std::string run_id = "run-fixture");

    /// Parent edges carry every output of each parent over the parent's
    /// window, bound to the consumer input fed by that parent model.
    std::string add(const std::string& model, Tick step, int ordinal, const std::vector<std::string>& parents,
                    double value, bool failed = false, const std::string& state_parent = {});

    store::EnsembleGraph& graph() { return graph_; }

private:
    store::EnsembleGraph graph_;
};

/// Source a (window 1) with two instances a1, a2 at step 0; b consumes a and
/// has one child per a instance.
store::EnsembleGraph two_branch_graph();
/// a1, a2 at step 0; b1 and b2 are children of a1 and b3 of a2, with b.y
/// values 10, 9 and 1. Under "maximize b.y" the runner-up timeline overlaps
/// the best one unless diversity is weighted.
store::EnsembleGraph three_timeline_graph();
timeline::PreferenceCriterion maximize(const std::string& model, const std::string& variable);

/// Random provenance graph with at most `max_nodes` nodes over a small flow
/// (two sources, a joining model, a stateful tail), with overlapping source
/// windows and some failed instances.
store::EnsembleGraph random_graph(std::mt19937_64& rng, std::size_t max_nodes);
timeline::PreferenceCriterion random_criterion(std::mt19937_64& rng);

/// Reverse breadth-first ancestor set, including the node.
std::set<std::size_t> reverse_bfs(const store::EnsembleGraph& graph, std::size_t node);

/// Every inclusion-maximal consistent, causally closed set of ok nodes, by
/// testing all subsets. Sorted ascending.
std::vector<std::vector<std::size_t>> brute_force_timelines(const store::EnsembleGraph& graph);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

std::filesystem::path data_path(const std::string& file);

}  // namespace strand::testing
