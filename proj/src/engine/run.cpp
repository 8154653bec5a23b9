#include "strand/engine/run.hpp"

#include "strand/core/errors.hpp"
#include "strand/core/flow_io.hpp"
#include "strand/core/hash.hpp"
#include "strand/core/validate.hpp"
#include "strand/core/yaml_fields.hpp"
#include "strand/engine/align.hpp"
#include "strand/engine/execute.hpp"
#include "strand/engine/pool.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

namespace strand::engine {

using nlohmann::json;

const SamplingPolicy& RunConfig::policy_for(const std::string& model) const {
    if (auto it = policy_per_model.find(model); it != policy_per_model.end()) {
        return it->second;
    }
    if (default_policy) {
        return *default_policy;
    }
    throw Error("no sampling policy for model '" + model + "'");
}

namespace {

SamplingPolicy parse_policy(const YAML::Node& node, const std::string& path) {
    yaml::Fields f(node, path, {"strategy", "budget", "branch_limit", "drop_rule", "seed"});
    SamplingPolicy p;
    if (f.has("strategy")) {
        try {
            p.strategy = sampling_strategy_from_string(yaml::as_string(f.get("strategy"), f.path("strategy")));
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            yaml::fail(f.get("strategy"), e.what());
        }
    }
    p.budget = static_cast<int>(yaml::as_int(f.need("budget"), f.path("budget")));
    p.branch_limit = f.has("branch_limit") ? static_cast<int>(yaml::as_int(f.get("branch_limit"), f.path("branch_limit")))
                                           : p.budget;
    if (f.has("drop_rule")) {
        const auto d = f.get("drop_rule");
        if (d.IsScalar()) {
            if (yaml::as_string(d, f.path("drop_rule")) != "none") {
                yaml::fail(d, "'" + f.path("drop_rule") + "' must be 'none' or {bottom_quantile: q}");
            }
        } else {
            yaml::Fields q(d, f.path("drop_rule"), {"bottom_quantile"});
            p.drop_quantile = yaml::as_double(q.need("bottom_quantile"), q.path("bottom_quantile"));
        }
    }
    if (f.has("seed")) {
        p.seed = yaml::as_uint64(f.get("seed"), f.path("seed"));
    }
    if (auto why = p.check(); !why.empty()) {
        yaml::fail(node, "'" + path + "': " + why);
    }
    return p;
}

json policy_json(const SamplingPolicy& p) {
    return {{"strategy", to_string(p.strategy)},
            {"budget", p.budget},
            {"branch_limit", p.branch_limit},
            {"drop_rule", p.drop_quantile ? json{{"bottom_quantile", *p.drop_quantile}} : json("none")},
            {"seed", p.seed}};
}

}  // namespace

RunConfig parse_run_config(const std::string& text, FlowGraph flow) {
    const auto doc = yaml::parse_document(text);
    yaml::Fields f(doc, "", {"flow", "horizon", "seed", "default_policy", "policy_per_model"});
    RunConfig c;
    c.flow = std::move(flow);
    c.horizon = yaml::as_int(f.need("horizon"), "horizon");
    if (c.horizon < 0) {
        yaml::fail(f.get("horizon"), "'horizon' must be >= 0");
    }
    if (f.has("seed")) {
        c.seed = yaml::as_uint64(f.get("seed"), "seed");
    }
    if (f.has("default_policy")) {
        c.default_policy = parse_policy(f.get("default_policy"), "default_policy");
    }
    if (f.has("policy_per_model")) {
        const auto m = f.get("policy_per_model");
        if (!m.IsMap()) {
            yaml::fail(m, "'policy_per_model' must be a mapping");
        }
        for (const auto& kv : m) {
            const auto id = kv.first.as<std::string>();
            if (!c.flow.find_model(id)) {
                yaml::fail(kv.first, "'policy_per_model' names unknown model '" + id + "'");
            }
            c.policy_per_model[id] = parse_policy(kv.second, "policy_per_model." + id);
        }
    }
    for (const auto& [id, model] : c.flow.nodes) {
        if (!c.policy_per_model.count(id) && !c.default_policy) {
            yaml::fail(doc, "no sampling policy for model '" + id + "' (add default_policy or a policy_per_model entry)");
        }
    }
    return c;
}

RunConfig load_run_config(const std::string& path, FlowGraph flow) {
    return parse_run_config(yaml::read_text(path), std::move(flow));
}

std::optional<std::string> run_config_flow_path(const std::string& path) {
    const auto doc = yaml::load_file(path);
    if (!doc.IsMap() || !doc["flow"]) {
        return std::nullopt;
    }
    const auto rel = std::filesystem::path(yaml::as_string(doc["flow"], "flow"));
    if (rel.is_absolute()) {
        return rel.string();
    }
    return (std::filesystem::path(path).parent_path() / rel).string();
}

json to_json(const RunConfig& config) {
    json policies = json::object();
    for (const auto& [id, model] : config.flow.nodes) {
        if (config.policy_per_model.count(id) || config.default_policy) {
            policies[id] = policy_json(config.policy_for(id));
        }
    }
    return {{"horizon", config.horizon}, {"seed", config.seed}, {"policies", policies}};
}

std::string run_id_for(const RunConfig& config) {
    const auto digest = sha256_hex(to_json(config.flow).dump() + "\n" + to_json(config).dump() + "\n" + kCodeVersion);
    return "run-" + digest.substr(0, 16);
}

namespace {

using Lineage = std::vector<std::pair<std::size_t, std::size_t>>;  // (task, ordinal), sorted by task

/// Merges b into a; false when they disagree on some task.
bool merge_lineage(Lineage& a, const Lineage& b) {
    Lineage out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
            out.push_back(a[i++]);
        } else if (i == a.size() || b[j].first < a[i].first) {
            out.push_back(b[j++]);
        } else {
            if (a[i].second != b[j].second) {
                return false;
            }
            out.push_back(a[i++]);
            ++j;
        }
    }
    a = std::move(out);
    return true;
}

struct Executed {
    std::size_t node = 0;
    std::size_t ordinal = 0;
    Lineage lineage;
    std::optional<ModelState> state;
    double drop_score = 0.0;
    bool has_drop_score = false;
};

struct TaskRecord {
    /// ok instances only; failed ones spawn no children.
    std::vector<Executed> ok;
};

struct Group {
    /// Parent tasks, ascending, and the chosen ok-instance position in each.
    std::vector<std::size_t> parent_tasks;
    std::vector<std::size_t> choice;
    Lineage lineage;
    InputGroup input;
    const ModelState* state = nullptr;
    std::vector<std::string> parent_ids;
};

constexpr std::size_t kMaxGroups = std::size_t{1} << 16;
constexpr const char* kDropScoreVariable = "drop_score";

struct Job {
    std::size_t task = 0;
    std::size_t group = 0;
    ParameterVector params;
};

struct JobResult {
    std::optional<ModelResult> result;
    std::string error;
};

SeriesWindow shifted(const SeriesWindow& w, Tick lag) {
    SeriesWindow out = w;
    out.t_start += lag;
    out.t_end += lag;
    return out;
}

/// The part of `w` over `ticks`, one sample per tick. Keeps a later source
/// from overriding ticks the plan assigned to an earlier one.
SeriesWindow clipped(const SeriesWindow& w, TickRange ticks) {
    if (ticks == w.range() && w.resolution == 1) {
        return w;
    }
    SeriesWindow out;
    out.variable = w.variable;
    out.t_start = std::max(ticks.lo, w.t_start);
    out.t_end = std::max(out.t_start, std::min(ticks.hi, w.t_end));
    out.width = w.width;
    for (Tick t = out.t_start; t < out.t_end; ++t) {
        for (int c = 0; c < w.width; ++c) {
            out.values.push_back(w.at_tick(t, c));
        }
    }
    return out;
}

class Runner {
public:
    Runner(const RunConfig& config, const ModelRegistry& registry, store::RunStore& store, const RunOptions& options,
           const ExecutionPlan& plan)
        : config_(config), registry_(registry), store_(store), options_(options), plan_(plan),
          records_(plan.tasks.size()) {}

    void run() {
        const std::size_t workers = options_.workers ? options_.workers : default_workers();
        for (std::size_t si = 0; si < plan_.stages.size(); ++si) {
            // Sampling is serial per task so results never depend on scheduling.
            std::vector<std::vector<Group>> groups(plan_.tasks.size());
            std::vector<Job> jobs;
            for (auto t : plan_.stages[si]) {
                groups[t] = build_groups(t);
                auto& task = plan_.tasks[t];
                const auto& model = config_.flow.model(task.model);
                std::vector<InputGroup> offered;
                offered.reserve(groups[t].size());
                for (const auto& g : groups[t]) {
                    offered.push_back(g.input);
                }
                const auto sample =
                    sample_instances(model, task.step, offered, config_.policy_for(task.model), config_.seed);
                for (auto d : sample.dropped_groups) {
                    store_.record_drop({task.model, task.step, groups[t][d].parent_ids, sample.group_scores[d]});
                }
                for (const auto& s : sample.instances) {
                    jobs.push_back({t, s.group, s.params});
                }
            }

            std::vector<JobResult> results(jobs.size());
            parallel_for(jobs.size(), workers, [&](std::size_t j) {
                const auto& job = jobs[j];
                const auto& task = plan_.tasks[job.task];
                const auto& g = groups[job.task][job.group];
                try {
                    results[j].result = execute_instance(config_.flow.model(task.model), registry_, task.step,
                                                         job.params, g.input.inputs, g.state);
                } catch (const ModelFailure& e) {
                    results[j].error = e.what();
                }
            });

            for (std::size_t j = 0; j < jobs.size(); ++j) {
                commit(jobs[j], groups[jobs[j].task][jobs[j].group], std::move(results[j]));
            }
            if (options_.progress) {
                options_.progress("stage " + std::to_string(si + 1) + "/" + std::to_string(plan_.stages.size()) +
                                  ": " + std::to_string(jobs.size()) + " instances");
            }
        }
    }

private:
    std::vector<Group> build_groups(std::size_t t) {
        const auto& task = plan_.tasks[t];
        std::vector<std::size_t> parents;
        for (const auto& in : task.inputs) {
            for (const auto& s : in.sources) {
                parents.push_back(s.task);
            }
        }
        if (task.state_parent) {
            parents.push_back(*task.state_parent);
        }
        std::sort(parents.begin(), parents.end());
        parents.erase(std::unique(parents.begin(), parents.end()), parents.end());

        for (auto p : parents) {
            if (records_[p].ok.empty()) {
                const auto& pt = plan_.tasks[p];
                throw EmptySample("no successful instances of " + pt.model + "@" + std::to_string(pt.step) +
                                  " to feed " + task.model + "@" + std::to_string(task.step));
            }
        }

        std::vector<Group> out;
        std::vector<std::size_t> choice(parents.size(), 0);
        // Depth-first over parent tasks, pruning inconsistent partial lineages.
        auto rec = [&](auto&& self, std::size_t depth, const Lineage& lineage) -> void {
            if (depth == parents.size()) {
                if (out.size() == kMaxGroups) {
                    throw TooLarge("more than " + std::to_string(kMaxGroups) + " input groups for " + task.model +
                                   "@" + std::to_string(task.step));
                }
                out.push_back(make_group(t, parents, choice, lineage));
                return;
            }
            const auto& cands = records_[parents[depth]].ok;
            for (std::size_t c = 0; c < cands.size(); ++c) {
                Lineage merged = lineage;
                if (merge_lineage(merged, cands[c].lineage)) {
                    choice[depth] = c;
                    self(self, depth + 1, merged);
                }
            }
        };
        rec(rec, 0, Lineage{});
        return out;
    }

    Group make_group(std::size_t t, const std::vector<std::size_t>& parents, const std::vector<std::size_t>& choice,
                     const Lineage& lineage) const {
        const auto& task = plan_.tasks[t];
        const auto& model = config_.flow.model(task.model);
        const auto& graph = store_.graph();
        Group g;
        g.parent_tasks = parents;
        g.choice = choice;
        g.lineage = lineage;

        auto chosen = [&](std::size_t task_index) -> const Executed& {
            const auto pos = std::lower_bound(parents.begin(), parents.end(), task_index) - parents.begin();
            return records_[task_index].ok[choice[static_cast<std::size_t>(pos)]];
        };

        double score_sum = 0.0;
        std::size_t score_n = 0;
        for (std::size_t i = 0; i < parents.size(); ++i) {
            const auto& e = records_[parents[i]].ok[choice[i]];
            const auto& id = graph.node(e.node).id;
            g.parent_ids.push_back(id);
            g.input.identity += (i ? "," : "") + id;
            if (e.ordinal > 0) {
                ++g.input.priority;
            }
            if (e.has_drop_score) {
                score_sum += e.drop_score;
                ++score_n;
            }
        }
        if (score_n > 0) {
            g.input.drop_score = score_sum / static_cast<double>(score_n);
        }
        if (task.state_parent) {
            const auto& sp = chosen(*task.state_parent);
            g.state = sp.state ? &*sp.state : nullptr;
        }

        for (std::size_t i = 0; i < task.inputs.size(); ++i) {
            const auto& ti = task.inputs[i];
            const auto& edge = config_.flow.edges[ti.edge];
            const auto& spec = model.inputs[i];
            std::vector<SeriesWindow> available;
            if (ti.required.lo < 0) {
                // Pre-history: the edge's initial value stands in for ticks before 0.
                SeriesWindow pre;
                pre.variable = edge.output_var;
                pre.t_start = ti.required.lo + edge.lag;
                pre.t_end = std::min<Tick>(ti.required.hi, 0) + edge.lag;
                pre.resolution = 1;
                pre.width = spec.width;
                pre.values.assign(static_cast<std::size_t>(pre.t_end - pre.t_start) * static_cast<std::size_t>(spec.width),
                                  edge.initial);
                available.push_back(std::move(pre));
            }
            for (const auto& s : ti.sources) {
                const auto& node = graph.node(chosen(s.task).node);
                const auto* out = node.output(edge.output_var);
                if (!out) {
                    throw CoverageGap("instance '" + node.id + "' has no output '" + edge.output_var + "'");
                }
                available.push_back(shifted(clipped(*out, s.ticks), edge.lag));
            }
            AlignmentTarget target{spec.name, *task.windows.input, model.input_scope.resolution, spec.width};
            g.input.inputs.push_back(align_inputs(target, available));
        }
        return g;
    }

    void commit(const Job& job, const Group& g, JobResult r) {
        const auto& task = plan_.tasks[job.task];
        const auto& model = config_.flow.model(task.model);
        auto& rec = records_[job.task];
        const std::size_t ordinal = next_ordinal_[job.task]++;

        store::SimulationInstance inst;
        inst.id = task.model + ":" + std::to_string(task.step) + ":" + std::to_string(ordinal);
        inst.model_id = task.model;
        inst.step = task.step;
        inst.params = job.params;
        inst.window = task.windows.output;
        json digest_src = json::array();
        for (const auto& w : g.input.inputs) {
            digest_src.push_back(to_json(w));
        }
        digest_src.push_back(g.state ? json(*g.state) : json(nullptr));
        inst.inputs_digest = sha256_hex(digest_src.dump());

        std::vector<store::DataEdge> edges;
        for (const auto& ti : task.inputs) {
            const auto& edge = config_.flow.edges[ti.edge];
            for (const auto& s : ti.sources) {
                const auto& producer = chosen_node(g, s.task);
                edges.push_back({producer, inst.id, edge.output_var, edge.input_var, s.ticks});
            }
        }
        if (task.state_parent) {
            inst.state_parent = chosen_node(g, *task.state_parent);
        }

        if (r.result) {
            inst.outputs = std::move(r.result->outputs);
            inst.status = store::InstanceStatus::ok;
        } else {
            inst.status = store::InstanceStatus::failed;
            inst.error = r.error;
        }
        const auto node = store_.append_instance(std::move(inst), std::move(edges));
        if (!r.result) {
            return;
        }
        Executed e;
        e.node = node;
        e.ordinal = ordinal;
        e.lineage = g.lineage;
        Lineage self{{job.task, ordinal}};
        merge_lineage(e.lineage, self);
        if (model.stateful) {
            e.state = std::move(r.result->state);
        }
        if (const auto* ds = store_.graph().node(node).output(kDropScoreVariable)) {
            double sum = 0.0;
            for (auto v : ds->values) {
                sum += v;
            }
            e.drop_score = ds->values.empty() ? 0.0 : sum / static_cast<double>(ds->values.size());
            e.has_drop_score = true;
        }
        rec.ok.push_back(std::move(e));
    }

    static const std::string& chosen_node(const Group& g, std::size_t parent_task) {
        const auto pos = std::lower_bound(g.parent_tasks.begin(), g.parent_tasks.end(), parent_task) -
                         g.parent_tasks.begin();
        return g.parent_ids[static_cast<std::size_t>(pos)];
    }

    const RunConfig& config_;
    const ModelRegistry& registry_;
    store::RunStore& store_;
    const RunOptions& options_;
    const ExecutionPlan& plan_;
    std::vector<TaskRecord> records_;
    std::map<std::size_t, std::size_t> next_ordinal_;
};

}  // namespace

RunResult run_ensemble(const RunConfig& config, const ModelRegistry& registry, store::EnsembleStore& store,
                       const RunOptions& options) {
    const auto names = registry.names();
    if (auto report = validate_flow(config.flow, &names); !report.empty()) {
        throw InvalidFlow("flow '" + config.flow.name + "' is invalid:\n" + format_report(report));
    }
    for (const auto& [id, model] : config.flow.nodes) {
        if (auto why = config.policy_for(id).check(); !why.empty()) {
            throw Error("invalid sampling policy for '" + id + "': " + why);
        }
    }
    const auto plan = compile_plan(config.flow, config.horizon);
    const auto run_id = run_id_for(config);
    auto run = store.create(run_id, config.flow, config.horizon, to_json(config), options.sync);

    RunResult result;
    result.run_id = run_id;
    try {
        Runner(config, registry, *run, options, plan).run();
    } catch (const std::exception& e) {
        run->finish(store::RunStatus::incomplete, e.what());
        throw;
    }
    std::string diagnostic;
    if (plan.tasks.empty()) {
        diagnostic = "complete-trivial: no output window fits the horizon";
    } else if (!plan.truncated.empty()) {
        diagnostic = std::to_string(plan.truncated.size()) + " task(s) at the horizon tail not scheduled";
    }
    run->finish(store::RunStatus::complete, diagnostic);
    result.status = store::RunStatus::complete;
    result.diagnostic = diagnostic;
    result.graph = run->graph();
    return result;
}

std::vector<std::string> verify_input_coverage(const store::EnsembleGraph& graph) {
    std::vector<std::string> problems;
    const auto& flow = graph.flow();
    for (std::size_t i = 0; i < graph.size(); ++i) {
        const auto& node = graph.node(i);
        const auto& model = flow.model(node.model_id);
        if (model.is_source()) {
            continue;
        }
        for (const auto& spec : model.inputs) {
            const auto fed = std::find_if(flow.edges.begin(), flow.edges.end(), [&](const FlowEdge& e) {
                return e.to_node == model.id && e.input_var == spec.name;
            });
            if (fed == flow.edges.end()) {
                problems.push_back(node.id + ": input '" + spec.name + "' has no flow edge");
                continue;
            }
            const auto need = required_producer_ticks(model, *fed, node.step);
            std::set<Tick> covered;
            for (auto e : graph.in_edges(i)) {
                const auto& de = graph.edges()[e];
                if (de.input_var != spec.name) {
                    continue;
                }
                const auto& producer = graph.node(graph.index_of(de.from));
                if (producer.model_id != fed->from_node || !producer.window.contains(de.window)) {
                    problems.push_back(node.id + ": edge from '" + de.from + "' claims ticks outside its output");
                    continue;
                }
                for (Tick t = de.window.lo; t < de.window.hi; ++t) {
                    covered.insert(t);
                }
            }
            for (Tick t = std::max<Tick>(need.lo, 0); t < need.hi; ++t) {
                if (!covered.count(t)) {
                    problems.push_back(node.id + ": input '" + spec.name + "' has no parent for producer tick " +
                                       std::to_string(t));
                    break;
                }
            }
        }
    }
    return problems;
}

std::vector<std::string> verify_budgets(const store::EnsembleGraph& graph, const RunConfig& config) {
    std::map<std::pair<std::string, Tick>, int> counts;
    for (const auto& n : graph.nodes()) {
        ++counts[{n.model_id, n.step}];
    }
    std::vector<std::string> problems;
    for (const auto& [key, n] : counts) {
        const int budget = config.policy_for(key.first).budget;
        if (n > budget) {
            problems.push_back(key.first + "@" + std::to_string(key.second) + ": " + std::to_string(n) +
                               " instances exceed budget " + std::to_string(budget));
        }
    }
    return problems;
}

}  // namespace strand::engine
