#pragma once

#include "strand/engine/plan.hpp"
#include "strand/engine/registry.hpp"
#include "strand/engine/sampling.hpp"
#include "strand/store/ensemble_store.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace strand::engine {

inline constexpr const char* kCodeVersion = "strand-engine/1";

struct RunConfig {
    FlowGraph flow;
    Tick horizon = 0;
    std::map<std::string, SamplingPolicy> policy_per_model;
    /// Used for models without an entry in policy_per_model.
    std::optional<SamplingPolicy> default_policy;
    std::uint64_t seed = 0;

    /// Throws Error when a model has no policy.
    const SamplingPolicy& policy_for(const std::string& model) const;
};

/// Parses a run-config document. `flow` supplies the models the policies
/// refer to. Unknown fields raise a line-anchored ParseError.
RunConfig parse_run_config(const std::string& text, FlowGraph flow);
RunConfig load_run_config(const std::string& path, FlowGraph flow);
/// The `flow:` path declared in a run-config file (resolved relative to the
/// file), if any.
std::optional<std::string> run_config_flow_path(const std::string& path);

/// Canonical config record (policies resolved per model, flow excluded).
nlohmann::json to_json(const RunConfig& config);

/// Content address: hash of flow, config and engine code version.
std::string run_id_for(const RunConfig& config);

struct RunOptions {
    /// 0 = default_workers().
    std::size_t workers = 0;
    bool sync = true;
    std::function<void(const std::string&)> progress;
};

struct RunResult {
    std::string run_id;
    store::RunStatus status = store::RunStatus::complete;
    std::string diagnostic;
    store::EnsembleGraph graph;
};

/// Executes the flow continuously up to the horizon, committing every
/// instance to a fresh run in `store`. Throws InvalidFlow for flows that fail
/// validation (nothing is written). EmptySample and CoverageGap end the run:
/// the partial graph stays persisted, marked incomplete, and the error is
/// rethrown.
RunResult run_ensemble(const RunConfig& config, const ModelRegistry& registry, store::EnsembleStore& store,
                       const RunOptions& options = {});

/// One line per non-source instance whose recorded parent edges leave a
/// gap in its lag-shifted input window (ticks >= 0).
std::vector<std::string> verify_input_coverage(const store::EnsembleGraph& graph);

/// One line per (model, step) whose executed instance count exceeds the
/// policy budget.
std::vector<std::string> verify_budgets(const store::EnsembleGraph& graph, const RunConfig& config);

}  // namespace strand::engine
