#include "strand/engine/plan.hpp"

#include "strand/core/errors.hpp"

#include <algorithm>
#include <queue>

namespace strand::engine {

std::optional<std::size_t> ExecutionPlan::find(const std::string& model, Tick step) const {
    auto it = index_.find({model, step});
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

namespace {

struct Draft {
    Task task;
    bool truncated = false;
};

}  // namespace

ExecutionPlan compile_plan(const FlowGraph& flow, Tick horizon) {
    if (auto report = validate_flow(flow); !report.empty()) {
        throw InvalidFlow("flow '" + flow.name + "' is invalid:\n" + format_report(report));
    }

    std::vector<Draft> drafts;
    std::map<std::pair<std::string, Tick>, std::size_t> index;
    for (const auto& [id, m] : flow.nodes) {
        for (Tick s = 0; s * m.shift + m.output_scope.window <= horizon; ++s) {
            index[{id, s}] = drafts.size();
            Draft d;
            d.task.model = id;
            d.task.step = s;
            d.task.windows = step_windows(m, s);
            drafts.push_back(std::move(d));
        }
    }

    for (auto& d : drafts) {
        const auto& m = flow.model(d.task.model);
        for (const auto& in : m.inputs) {
            const auto* e = flow.feeding(m.id, in.name);
            TaskInput ti;
            ti.edge = static_cast<std::size_t>(e - flow.edges.data());
            ti.required = required_producer_ticks(m, *e, d.task.step);
            const auto& producer = flow.model(e->from_node);
            auto planned = resolve_producers(producer, ti.required, horizon);
            if (!planned.missing.empty()) {
                auto any = resolve_producers(producer, ti.required, std::nullopt);
                if (!any.missing.empty()) {
                    throw UnsatisfiableInput(m.id + "@" + std::to_string(d.task.step) + " input '" + in.name +
                                             "' needs tick " + std::to_string(any.missing.front()) +
                                             " which '" + producer.id + "' never writes");
                }
                d.truncated = true;
            }
            for (const auto& src : planned.sources) {
                const auto t = index.at({producer.id, src.step});
                ti.sources.push_back({t, src.ticks});
                d.task.deps.push_back(t);
            }
            d.task.inputs.push_back(std::move(ti));
        }
        if (m.stateful && d.task.step > 0) {
            const auto t = index.at({m.id, d.task.step - 1});
            d.task.state_parent = t;
            d.task.deps.push_back(t);
        }
        std::sort(d.task.deps.begin(), d.task.deps.end());
        d.task.deps.erase(std::unique(d.task.deps.begin(), d.task.deps.end()), d.task.deps.end());
    }

    // Kahn's algorithm: stage = longest dependency path; truncation spreads downstream.
    std::vector<std::vector<std::size_t>> succ(drafts.size());
    std::vector<std::size_t> indeg(drafts.size(), 0);
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        for (auto dep : drafts[i].task.deps) {
            succ[dep].push_back(i);
            ++indeg[i];
        }
    }
    std::queue<std::size_t> ready;
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        if (indeg[i] == 0) {
            ready.push(i);
        }
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
        const auto i = ready.front();
        ready.pop();
        ++visited;
        for (auto j : succ[i]) {
            drafts[j].task.stage = std::max(drafts[j].task.stage, drafts[i].task.stage + 1);
            drafts[j].truncated = drafts[j].truncated || drafts[i].truncated;
            if (--indeg[j] == 0) {
                ready.push(j);
            }
        }
    }
    if (visited != drafts.size()) {
        throw InvalidFlow("flow '" + flow.name + "' unrolls into a cyclic task graph");
    }

    ExecutionPlan plan;
    plan.horizon = horizon;
    std::vector<std::size_t> remap(drafts.size(), 0);
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        if (drafts[i].truncated) {
            plan.truncated.emplace_back(drafts[i].task.model, drafts[i].task.step);
            continue;
        }
        remap[i] = plan.tasks.size();
        plan.index_[{drafts[i].task.model, drafts[i].task.step}] = plan.tasks.size();
        plan.tasks.push_back(std::move(drafts[i].task));
    }
    for (auto& t : plan.tasks) {
        for (auto& d : t.deps) d = remap[d];
        for (auto& in : t.inputs) {
            for (auto& s : in.sources) s.task = remap[s.task];
        }
        if (t.state_parent) t.state_parent = remap[*t.state_parent];
        if (plan.stages.size() <= t.stage) {
            plan.stages.resize(t.stage + 1);
        }
    }
    for (std::size_t i = 0; i < plan.tasks.size(); ++i) {
        plan.stages[plan.tasks[i].stage].push_back(i);
    }
    // Truncation can empty a stage.
    plan.stages.erase(std::remove_if(plan.stages.begin(), plan.stages.end(), [](const auto& s) { return s.empty(); }),
                      plan.stages.end());
    for (std::size_t k = 0; k < plan.stages.size(); ++k) {
        for (auto i : plan.stages[k]) plan.tasks[i].stage = k;
    }
    return plan;
}

}  // namespace strand::engine
