#include "strand/engine/sampling.hpp"

#include "strand/core/errors.hpp"
#include "strand/core/hash.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace strand::engine {

const char* to_string(SamplingStrategy s) {
    switch (s) {
        case SamplingStrategy::grid: return "grid";
        case SamplingStrategy::uniform_random: return "uniform-random";
        case SamplingStrategy::latin_hypercube: return "latin-hypercube";
    }
    return "grid";
}

SamplingStrategy sampling_strategy_from_string(const std::string& s) {
    if (s == "grid") return SamplingStrategy::grid;
    if (s == "uniform-random") return SamplingStrategy::uniform_random;
    if (s == "latin-hypercube") return SamplingStrategy::latin_hypercube;
    throw Error("unknown sampling strategy '" + s + "' (grid, uniform-random, latin-hypercube)");
}

std::string SamplingPolicy::check() const {
    if (budget < 1) return "budget must be >= 1";
    if (branch_limit < 1) return "branch_limit must be >= 1";
    if (drop_quantile && !(*drop_quantile >= 0.0 && *drop_quantile < 1.0)) return "drop quantile must be in [0, 1)";
    return {};
}

namespace {

constexpr std::size_t kUnbounded = std::size_t{1} << 30;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
};

double draw(const ParameterSpec& p, double u) {
    if (const auto* c = std::get_if<ContinuousDomain>(&p.domain)) {
        return c->lo + u * (c->hi - c->lo);
    }
    const auto& vals = std::get<DiscreteDomain>(p.domain).values;
    const auto i = std::min(vals.size() - 1, static_cast<std::size_t>(u * static_cast<double>(vals.size())));
    return vals[i];
}

void add_distinct(std::vector<ParameterVector>& out, ParameterVector pv, std::size_t want) {
    if (out.size() < want && std::find(out.begin(), out.end(), pv) == out.end()) {
        out.push_back(std::move(pv));
    }
}

void top_up_random(const ModelSpec& m, std::vector<ParameterVector>& out, std::size_t want, Rng& rng) {
    for (std::size_t attempt = 0; out.size() < want && attempt < 64 * want + 64; ++attempt) {
        ParameterVector pv;
        for (const auto& p : m.params) {
            pv[p.name] = draw(p, rng.uniform());
        }
        add_distinct(out, std::move(pv), want);
    }
}

std::vector<ParameterVector> grid_points(const ModelSpec& m, std::size_t want, Rng& rng) {
    std::size_t discrete_points = 1;
    std::size_t continuous = 0;
    for (const auto& p : m.params) {
        if (p.is_continuous()) {
            ++continuous;
        } else {
            discrete_points = std::min(kUnbounded, discrete_points * std::get<DiscreteDomain>(p.domain).values.size());
        }
    }
    std::size_t levels = 1;
    auto total_for = [&](std::size_t l) {
        std::size_t t = discrete_points;
        for (std::size_t i = 0; i < continuous; ++i) {
            t = std::min(kUnbounded, t * l);
        }
        return t;
    };
    while (continuous > 0 && total_for(levels) < want) {
        ++levels;
    }
    const std::size_t total = total_for(levels);

    std::vector<std::size_t> picks(total);
    std::iota(picks.begin(), picks.end(), 0);
    if (total > want) {
        rng.shuffle(picks);
        picks.resize(want);
        std::sort(picks.begin(), picks.end());
    }
    std::vector<ParameterVector> out;
    for (auto index : picks) {
        ParameterVector pv;
        // Mixed-radix decode, last parameter fastest.
        for (auto it = m.params.rbegin(); it != m.params.rend(); ++it) {
            if (const auto* c = std::get_if<ContinuousDomain>(&it->domain)) {
                const auto level = index % levels;
                index /= levels;
                pv[it->name] = c->lo + (static_cast<double>(level) + 0.5) * (c->hi - c->lo) / static_cast<double>(levels);
            } else {
                const auto& vals = std::get<DiscreteDomain>(it->domain).values;
                pv[it->name] = vals[index % vals.size()];
                index /= vals.size();
            }
        }
        out.push_back(std::move(pv));
    }
    return out;
}

std::vector<ParameterVector> random_points(const ModelSpec& m, std::size_t want, Rng& rng) {
    std::vector<ParameterVector> out;
    top_up_random(m, out, want, rng);
    return out;
}

std::vector<ParameterVector> lhs_points(const ModelSpec& m, std::size_t want, Rng& rng) {
    std::vector<std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < m.params.size(); ++i) {
        std::vector<std::size_t> perm(want);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        strata.push_back(std::move(perm));
    }
    std::vector<ParameterVector> out;
    for (std::size_t j = 0; j < want; ++j) {
        ParameterVector pv;
        for (std::size_t i = 0; i < m.params.size(); ++i) {
            const double u = (static_cast<double>(strata[i][j]) + rng.uniform()) / static_cast<double>(want);
            pv[m.params[i].name] = draw(m.params[i], u);
        }
        add_distinct(out, std::move(pv), want);
    }
    // Discrete-only domains can collide across strata.
    top_up_random(m, out, want, rng);
    return out;
}

std::vector<ParameterVector> generate(const ModelSpec& m, SamplingStrategy strategy, std::size_t want, Rng& rng) {
    if (want == 0) {
        return {};
    }
    if (m.params.empty()) {
        return {ParameterVector{}};
    }
    switch (strategy) {
        case SamplingStrategy::grid: return grid_points(m, want, rng);
        case SamplingStrategy::uniform_random: return random_points(m, want, rng);
        case SamplingStrategy::latin_hypercube: return lhs_points(m, want, rng);
    }
    return {};
}

}  // namespace

std::size_t domain_capacity(const ModelSpec& model) {
    std::size_t cap = 1;
    for (const auto& p : model.params) {
        if (p.is_continuous()) {
            return kUnbounded;
        }
        cap = std::min(kUnbounded, cap * std::get<DiscreteDomain>(p.domain).values.size());
    }
    return cap;
}

SampleResult sample_instances(const ModelSpec& model, Tick step, std::span<const InputGroup> groups,
                              const SamplingPolicy& policy, std::uint64_t run_seed) {
    if (auto why = policy.check(); !why.empty()) {
        throw Error("invalid sampling policy for '" + model.id + "': " + why);
    }
    if (groups.empty()) {
        throw EmptySample("no input groups for " + model.id + "@" + std::to_string(step));
    }
    const auto run_s = std::to_string(run_seed);
    const auto policy_s = std::to_string(policy.seed);
    const auto step_s = std::to_string(step);

    SampleResult result;
    std::vector<std::size_t> kept(groups.size());
    std::iota(kept.begin(), kept.end(), 0);

    if (policy.drop_quantile) {
        for (const auto& g : groups) {
            if (g.drop_score) {
                result.group_scores.push_back(*g.drop_score);
            } else {
                Rng rng(derive_seed({run_s, policy_s, model.id, step_s, "drop", g.identity}));
                result.group_scores.push_back(rng.uniform());
            }
        }
        const auto n_drop = static_cast<std::size_t>(
            std::floor(*policy.drop_quantile * static_cast<double>(groups.size()) + 0.5));
        std::sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
            if (result.group_scores[a] != result.group_scores[b]) {
                return result.group_scores[a] < result.group_scores[b];
            }
            return groups[a].identity < groups[b].identity;
        });
        result.dropped_groups.assign(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(n_drop));
        std::sort(result.dropped_groups.begin(), result.dropped_groups.end());
        kept.erase(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(n_drop));
        if (kept.empty()) {
            throw EmptySample("drop rule (q=" + std::to_string(*policy.drop_quantile) + ") removed all " +
                              std::to_string(groups.size()) + " groups of " + model.id + "@" + step_s);
        }
    }

    // Branch order: priority first, then a seeded shuffle key.
    std::vector<std::uint64_t> order_key(groups.size());
    for (auto g : kept) {
        order_key[g] = derive_seed({run_s, policy_s, model.id, step_s, "order", groups[g].identity});
    }
    std::sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
        if (groups[a].priority != groups[b].priority) {
            return groups[a].priority < groups[b].priority;
        }
        if (order_key[a] != order_key[b]) {
            return order_key[a] < order_key[b];
        }
        return groups[a].identity < groups[b].identity;
    });

    const std::size_t capacity = std::min<std::size_t>(domain_capacity(model), static_cast<std::size_t>(policy.branch_limit));
    std::vector<std::size_t> allot(groups.size(), 0);
    std::size_t total = 0;
    const auto budget = static_cast<std::size_t>(policy.budget);
    for (std::size_t round = 0; round < capacity && total < budget; ++round) {
        for (auto g : kept) {
            if (total == budget) {
                break;
            }
            ++allot[g];
            ++total;
        }
    }

    for (auto g : kept) {
        if (allot[g] == 0) {
            continue;
        }
        Rng rng(derive_seed({run_s, policy_s, model.id, step_s, groups[g].identity}));
        for (auto& pv : generate(model, policy.strategy, allot[g], rng)) {
            result.instances.push_back({std::move(pv), g});
        }
    }
    return result;
}

}  // namespace strand::engine
