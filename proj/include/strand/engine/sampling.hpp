#pragma once

#include "strand/core/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace strand::engine {

enum class SamplingStrategy { grid, uniform_random, latin_hypercube };

const char* to_string(SamplingStrategy s);
SamplingStrategy sampling_strategy_from_string(const std::string& s);

struct SamplingPolicy {
    SamplingStrategy strategy = SamplingStrategy::latin_hypercube;
    /// Max instances per actor per step.
    int budget = 1;
    /// Max parameter vectors per upstream group.
    int branch_limit = 1;
    /// Drop the bottom q fraction of upstream groups (by drop score) before
    /// branching; nullopt disables dropping.
    std::optional<double> drop_quantile;
    std::uint64_t seed = 0;

    /// Empty when valid, else the reason.
    std::string check() const;

    friend bool operator==(const SamplingPolicy&, const SamplingPolicy&) = default;
};

/// One aligned upstream combination offered to the sampling manager.
struct InputGroup {
    /// Stable identity (the parent instance ids); empty for source models.
    std::string identity;
    /// Lower values are branched first. The engine uses the number of parents
    /// that are not the first instance of their step.
    int priority = 0;
    std::vector<SeriesWindow> inputs;
    /// Declared drop score; nullopt means a seeded random score is used.
    std::optional<double> drop_score;
};

struct SampledInstance {
    ParameterVector params;
    std::size_t group = 0;

    friend bool operator==(const SampledInstance&, const SampledInstance&) = default;
};

struct SampleResult {
    /// Ordered by branching priority; size <= budget.
    std::vector<SampledInstance> instances;
    std::vector<std::size_t> dropped_groups;
    /// Score used by the drop rule per group (empty when dropping is off).
    std::vector<double> group_scores;
};

/// Chooses which parameter vectors to execute for one (model, step).
/// Deterministic in (policy.seed, run_seed, model id, step, group identities).
/// Throws EmptySample when no groups are offered or the drop rule removes
/// all of them.
SampleResult sample_instances(const ModelSpec& model, Tick step, std::span<const InputGroup> groups,
                              const SamplingPolicy& policy, std::uint64_t run_seed = 0);

/// Number of distinct parameter vectors the model's domain admits, capped.
std::size_t domain_capacity(const ModelSpec& model);

}  // namespace strand::engine
