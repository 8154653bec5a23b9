#include "fixtures.hpp"

#include "strand/core/windows.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace strand::testing {

ModelSpec make_model(const std::string& id, std::vector<std::string> inputs, std::vector<std::string> outputs,
                     Tick window, Tick shift, bool stateful) {
    ModelSpec m;
    m.id = id;
    m.function_ref = "identity";
    for (auto& v : inputs) {
        m.inputs.push_back({v});
    }
    for (auto& v : outputs) {
        m.outputs.push_back({v});
    }
    m.input_scope = {inputs.empty() ? 0 : window, 1};
    m.output_scope = {window, 1};
    m.shift = shift;
    m.stateful = stateful;
    return m;
}

SeriesWindow constant_series(const std::string& variable, TickRange window, double value, Tick resolution) {
    SeriesWindow s;
    s.variable = variable;
    s.t_start = window.lo;
    s.t_end = window.hi;
    s.resolution = resolution;
    s.values.assign(static_cast<std::size_t>(s.sample_count()), value);
    return s;
}

GraphBuilder::GraphBuilder(FlowGraph flow, Tick horizon, std::string run_id)
    : graph_(std::move(run_id), std::move(flow), horizon) {}

std::string GraphBuilder::add(const std::string& model, Tick step, int ordinal, const std::vector<std::string>& parents,
                              double value, bool failed, const std::string& state_parent) {
    const auto& flow = graph_.flow();
    const auto& spec = flow.model(model);
    store::SimulationInstance inst;
    inst.id = model + ":" + std::to_string(step) + ":" + std::to_string(ordinal);
    inst.model_id = model;
    inst.step = step;
    inst.window = step_windows(spec, step).output;
    inst.inputs_digest = "digest-" + inst.id;
    if (failed) {
        inst.status = store::InstanceStatus::failed;
        inst.error = "boom";
    } else {
        for (const auto& out : spec.outputs) {
            inst.outputs.push_back(constant_series(out.name, inst.window, value));
        }
    }
    if (!state_parent.empty()) {
        inst.state_parent = state_parent;
    }
    std::vector<store::DataEdge> edges;
    for (const auto& pid : parents) {
        const auto& p = graph_.node(graph_.index_of(pid));
        for (const auto& e : flow.edges) {
            if (e.from_node == p.model_id && e.to_node == model) {
                edges.push_back({pid, inst.id, e.output_var, e.input_var, p.window});
            }
        }
    }
    graph_.append(inst, std::move(edges));
    return inst.id;
}

namespace {

FlowGraph ab_flow() {
    FlowGraph f;
    f.name = "two-branch";
    f.nodes["a"] = make_model("a", {}, {"x"}, 1, 1);
    f.nodes["b"] = make_model("b", {"x"}, {"y"}, 1, 1);
    f.edges.push_back({"a", "x", "b", "x"});
    return f;
}

}  // namespace

store::EnsembleGraph two_branch_graph() {
    GraphBuilder b(ab_flow(), 1, "run-two-branch");
    const auto a1 = b.add("a", 0, 0, {}, 1.0);
    const auto a2 = b.add("a", 0, 1, {}, 2.0);
    b.add("b", 0, 0, {a1}, 3.0);
    b.add("b", 0, 1, {a2}, 4.0);
    return b.graph();
}

store::EnsembleGraph three_timeline_graph() {
    GraphBuilder b(ab_flow(), 1, "run-three-timelines");
    const auto a1 = b.add("a", 0, 0, {}, 0.5);
    const auto a2 = b.add("a", 0, 1, {}, 0.5);
    b.add("b", 0, 0, {a1}, 10.0);
    b.add("b", 0, 1, {a1}, 9.0);
    b.add("b", 0, 2, {a2}, 1.0);
    return b.graph();
}

timeline::PreferenceCriterion maximize(const std::string& model, const std::string& variable) {
    timeline::PreferenceCriterion c;
    c.terms.push_back({model, variable, timeline::Direction::maximize, {}, 1.0});
    return c;
}

store::EnsembleGraph random_graph(std::mt19937_64& rng, std::size_t max_nodes) {
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    auto unit = [&] { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); };

    FlowGraph f;
    f.name = "random";
    const Tick wa = 1 + static_cast<Tick>(pick(2));
    f.nodes["a"] = make_model("a", {}, {"x"}, wa, 1);
    f.nodes["d"] = make_model("d", {}, {"z"}, 1, 1);
    f.nodes["b"] = make_model("b", {"x", "z"}, {"y"}, 1, 1);
    f.nodes["c"] = make_model("c", {"y"}, {"w"}, 1, 1, true);
    f.edges.push_back({"a", "x", "b", "x"});
    f.edges.push_back({"d", "z", "b", "z"});
    f.edges.push_back({"b", "y", "c", "y"});
    const Tick horizon = 2 + static_cast<Tick>(pick(3));
    GraphBuilder builder(f, horizon, "run-random");
    auto& g = builder.graph();

    std::map<std::pair<std::string, Tick>, std::vector<std::string>> ok;
    auto choose = [&](const std::string& m, Tick s) -> std::string {
        const auto it = ok.find({m, s});
        if (it == ok.end() || it->second.empty()) {
            return {};
        }
        return it->second[pick(it->second.size())];
    };
    for (Tick s = 0; s < horizon; ++s) {
        for (const std::string m : {"a", "d", "b", "c"}) {
            if (step_windows(f.model(m), s).output.hi > horizon) {
                continue;
            }
            const int count = 1 + static_cast<int>(pick(3));
            for (int k = 0; k < count && g.size() < max_nodes; ++k) {
                std::vector<std::string> parents;
                std::string state;
                if (m == "b") {
                    auto pa = choose("a", s);
                    auto pd = choose("d", s);
                    if (pa.empty() || pd.empty()) {
                        continue;
                    }
                    parents = {pa, pd};
                } else if (m == "c") {
                    auto pb = choose("b", s);
                    if (pb.empty()) {
                        continue;
                    }
                    parents = {pb};
                    if (s > 0) {
                        state = choose("c", s - 1);
                        if (state.empty()) {
                            continue;
                        }
                    }
                }
                const bool failed = unit() < 0.15;
                const auto id = builder.add(m, s, k, parents, unit(), failed, state);
                if (!failed) {
                    ok[{m, s}].push_back(id);
                }
            }
        }
    }
    return g;
}

timeline::PreferenceCriterion random_criterion(std::mt19937_64& rng) {
    static const std::vector<std::pair<std::string, std::string>> vars = {{"a", "x"}, {"d", "z"}, {"b", "y"}, {"c", "w"}};
    timeline::PreferenceCriterion c;
    const auto n = 1 + rng() % 2;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& [m, v] = vars[rng() % vars.size()];
        const auto dir = rng() % 3;
        timeline::CriterionTerm t{m, v, static_cast<timeline::Direction>(dir), {}, 0.5 + 0.5 * static_cast<double>(rng() % 3)};
        if (t.direction == timeline::Direction::match) {
            t.target = {0.5, 0.25};
        }
        c.terms.push_back(t);
    }
    c.coverage_weight = static_cast<double>(rng() % 2);
    return c;
}

std::set<std::size_t> reverse_bfs(const store::EnsembleGraph& graph, std::size_t node) {
    std::set<std::size_t> seen{node};
    std::deque<std::size_t> queue{node};
    while (!queue.empty()) {
        const auto v = queue.front();
        queue.pop_front();
        const auto& n = graph.node(v);
        std::vector<std::size_t> up;
        for (const auto& e : graph.edges()) {
            if (e.to == n.id) {
                up.push_back(graph.index_of(e.from));
            }
        }
        if (n.state_parent) {
            up.push_back(graph.index_of(*n.state_parent));
        }
        for (auto p : up) {
            if (seen.insert(p).second) {
                queue.push_back(p);
            }
        }
    }
    return seen;
}

std::vector<std::vector<std::size_t>> brute_force_timelines(const store::EnsembleGraph& graph) {
    std::vector<std::size_t> cand;
    for (std::size_t v = 0; v < graph.size(); ++v) {
        if (graph.node(v).status == store::InstanceStatus::ok) {
            cand.push_back(v);
        }
    }
    const auto n = cand.size();
    std::vector<std::uint32_t> parent_mask(n, 0);
    std::vector<bool> has_outside_parent(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto p : reverse_bfs(graph, cand[i])) {
            if (p == cand[i]) {
                continue;
            }
            const auto it = std::find(cand.begin(), cand.end(), p);
            if (it == cand.end()) {
                has_outside_parent[i] = true;
            } else {
                parent_mask[i] |= 1u << (it - cand.begin());
            }
        }
    }
    std::vector<std::uint32_t> clash(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto& x = graph.node(cand[i]);
            const auto& y = graph.node(cand[j]);
            if (i != j && x.model_id == y.model_id && x.window.intersects(y.window)) {
                clash[i] |= 1u << j;
            }
        }
    }
    std::vector<std::uint32_t> valid;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        bool good = true;
        for (std::size_t i = 0; i < n && good; ++i) {
            if (mask >> i & 1u) {
                good = !has_outside_parent[i] && (parent_mask[i] & ~mask) == 0 && (clash[i] & mask) == 0;
            }
        }
        if (good) {
            valid.push_back(mask);
        }
    }
    std::vector<std::vector<std::size_t>> out;
    for (auto m : valid) {
        const bool maximal = std::none_of(valid.begin(), valid.end(), [&](std::uint32_t w) { return w != m && (w & m) == m; });
        if (maximal) {
            std::vector<std::size_t> set;
            for (std::size_t i = 0; i < n; ++i) {
                if (m >> i & 1u) {
                    set.push_back(cand[i]);
                }
            }
            out.push_back(std::move(set));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("strand-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::filesystem::path data_path(const std::string& file) { return std::filesystem::path(STRAND_DATA_DIR) / file; }

}  // namespace strand::testing
