#include "strand/core/validate.hpp"

#include "strand/core/windows.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

namespace strand {

const char* to_string(ViolationCode code) {
    switch (code) {
        case ViolationCode::invalid_model: return "invalid model";
        case ViolationCode::unknown_function: return "unknown function";
        case ViolationCode::invalid_parameter: return "invalid parameter";
        case ViolationCode::invalid_scope: return "invalid scope";
        case ViolationCode::duplicate_variable: return "duplicate variable";
        case ViolationCode::unknown_node: return "unknown node";
        case ViolationCode::unknown_variable: return "unknown variable";
        case ViolationCode::kind_mismatch: return "kind mismatch";
        case ViolationCode::invalid_lag: return "invalid lag";
        case ViolationCode::unfed_input: return "unfed input";
        case ViolationCode::multiply_fed_input: return "multiply fed input";
        case ViolationCode::zero_lag_cycle: return "zero-lag cycle";
        case ViolationCode::coverage_gap: return "coverage gap";
        case ViolationCode::unrolled_cycle: return "unrolled cycle";
    }
    return "unknown";
}

std::string format_report(const ValidationReport& report) {
    std::ostringstream os;
    for (const auto& v : report) {
        os << to_string(v.code) << ": " << v.subject << ": " << v.message << '\n';
    }
    return os.str();
}

ProducerCoverage resolve_producers(const ModelSpec& producer, TickRange ticks, std::optional<Tick> horizon) {
    ProducerCoverage cov;
    const Tick shift = producer.shift;
    const Tick width = producer.output_scope.window;
    if (shift <= 0 || width <= 0) {
        for (Tick t = std::max<Tick>(0, ticks.lo); t < ticks.hi; ++t) {
            cov.missing.push_back(t);
        }
        return cov;
    }
    for (Tick t = std::max<Tick>(0, ticks.lo); t < ticks.hi; ++t) {
        std::optional<Tick> chosen;
        std::optional<Tick> contained;
        for (Tick k = t / shift; k >= 0 && k * shift + width > t; --k) {
            if (horizon && k * shift + width > *horizon) {
                continue;
            }
            if (!chosen) {
                chosen = k;
            }
            if (ticks.contains(TickRange{k * shift, k * shift + width})) {
                contained = k;
                break;
            }
        }
        if (contained) {
            chosen = contained;
        }
        if (!chosen) {
            cov.missing.push_back(t);
            continue;
        }
        if (!cov.sources.empty() && cov.sources.back().step == *chosen && cov.sources.back().ticks.hi == t) {
            cov.sources.back().ticks.hi = t + 1;
        } else {
            cov.sources.push_back({*chosen, {t, t + 1}});
        }
    }
    return cov;
}

namespace {

std::string edge_label(const FlowEdge& e) {
    return e.from_node + "." + e.output_var + " -> " + e.to_node + "." + e.input_var;
}

void check_variables(const ModelSpec& m, const std::vector<VariableSpec>& vars, const char* which,
                     ValidationReport& report) {
    std::set<std::string> seen;
    for (const auto& v : vars) {
        if (v.name.empty()) {
            report.push_back({ViolationCode::invalid_model, m.id, std::string("empty ") + which + " variable name"});
        }
        if (!seen.insert(v.name).second) {
            report.push_back({ViolationCode::duplicate_variable, m.id,
                              std::string(which) + " variable '" + v.name + "' declared twice"});
        }
        if (v.width < 1 || (v.kind == VariableKind::scalar && v.width != 1)) {
            report.push_back({ViolationCode::invalid_model, m.id,
                              std::string(which) + " variable '" + v.name + "' has invalid width"});
        }
    }
}

void check_model(const std::string& key, const ModelSpec& m, const std::set<std::string>* known,
                 ValidationReport& report) {
    if (m.id != key) {
        report.push_back({ViolationCode::invalid_model, key, "node key does not match model id '" + m.id + "'"});
    }
    if (m.function_ref.empty()) {
        report.push_back({ViolationCode::unknown_function, m.id, "function_ref is empty"});
    } else if (known && !known->count(m.function_ref)) {
        report.push_back({ViolationCode::unknown_function, m.id,
                          "function_ref '" + m.function_ref + "' is not registered"});
    }

    std::set<std::string> names;
    for (const auto& p : m.params) {
        if (!names.insert(p.name).second) {
            report.push_back({ViolationCode::invalid_parameter, m.id, "parameter '" + p.name + "' declared twice"});
        }
        if (const auto* c = std::get_if<ContinuousDomain>(&p.domain)) {
            if (!(std::isfinite(c->lo) && std::isfinite(c->hi) && c->lo < c->hi)) {
                report.push_back({ViolationCode::invalid_parameter, m.id,
                                  "parameter '" + p.name + "' needs finite lo < hi"});
            }
        } else {
            const auto& vals = std::get<DiscreteDomain>(p.domain).values;
            std::set<double> uniq(vals.begin(), vals.end());
            if (vals.empty() || uniq.size() != vals.size() ||
                !std::all_of(vals.begin(), vals.end(), [](double v) { return std::isfinite(v); })) {
                report.push_back({ViolationCode::invalid_parameter, m.id,
                                  "parameter '" + p.name + "' needs a non-empty, duplicate-free value list"});
            }
        }
    }

    check_variables(m, m.inputs, "input", report);
    check_variables(m, m.outputs, "output", report);
    if (m.outputs.empty()) {
        report.push_back({ViolationCode::invalid_model, m.id, "model declares no outputs"});
    }

    const auto& os = m.output_scope;
    if (os.window < 1 || os.resolution < 1 || os.window % os.resolution != 0) {
        report.push_back({ViolationCode::invalid_scope, m.id,
                          "output scope needs window >= 1 and a resolution dividing it"});
    }
    const auto& is = m.input_scope;
    if (m.is_source()) {
        if (is.window != 0) {
            report.push_back({ViolationCode::invalid_scope, m.id, "source model must have input window 0"});
        }
    } else if (is.window < 1 || is.resolution < 1 || is.window % is.resolution != 0) {
        report.push_back({ViolationCode::invalid_scope, m.id,
                          "input scope needs window >= 1 and a resolution dividing it"});
    }
    if (m.shift < 1) {
        report.push_back({ViolationCode::invalid_scope, m.id, "shift must be >= 1"});
    }
}

// Tarjan SCC over lag-0 edges; one violation per cycle-bearing component.
void check_zero_lag_cycles(const FlowGraph& flow, ValidationReport& report) {
    std::map<std::string, std::vector<std::string>> adj;
    std::set<std::string> self_loops;
    for (const auto& e : flow.edges) {
        if (e.lag == 0 && flow.nodes.count(e.from_node) && flow.nodes.count(e.to_node)) {
            adj[e.from_node].push_back(e.to_node);
            if (e.from_node == e.to_node) {
                self_loops.insert(e.from_node);
            }
        }
    }
    std::map<std::string, int> index, low;
    std::set<std::string> on_stack;
    std::vector<std::string> stack;
    int counter = 0;
    std::function<void(const std::string&)> strongconnect = [&](const std::string& v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack.insert(v);
        for (const auto& w : adj[v]) {
            if (!index.count(w)) {
                strongconnect(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack.count(w)) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::vector<std::string> comp;
            std::string w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack.erase(w);
                comp.push_back(w);
            } while (w != v);
            if (comp.size() > 1 || self_loops.count(v)) {
                std::sort(comp.begin(), comp.end());
                std::string subject;
                for (const auto& n : comp) {
                    subject += (subject.empty() ? "" : ", ") + n;
                }
                report.push_back({ViolationCode::zero_lag_cycle, subject,
                                  "cycle without a lagged edge cannot be unrolled in time"});
            }
        }
    };
    for (const auto& [id, _] : flow.nodes) {
        if (!index.count(id)) {
            strongconnect(id);
        }
    }
}

void check_coverage(const FlowGraph& flow, ValidationReport& report) {
    for (const auto& e : flow.edges) {
        const auto& producer = flow.model(e.from_node);
        const auto& consumer = flow.model(e.to_node);
        const Tick period = std::lcm(consumer.shift, producer.shift) / consumer.shift;
        const Tick steps = std::min<Tick>(
            10000, (e.lag + consumer.input_scope.window) / consumer.shift + 2 + period);
        for (Tick s = 0; s < steps; ++s) {
            auto cov = resolve_producers(producer, required_producer_ticks(consumer, e, s), std::nullopt);
            if (!cov.missing.empty()) {
                report.push_back({ViolationCode::coverage_gap, edge_label(e),
                                  "producer never writes tick " + std::to_string(cov.missing.front()) +
                                      " needed by step " + std::to_string(s)});
                break;
            }
        }
    }
}

// Unrolls the flow over a probe horizon long enough to repeat every window
// pattern and checks the task graph is acyclic.
void check_unrolled_cycles(const FlowGraph& flow, ValidationReport& report) {
    Tick period = 1;
    Tick widest = 1;
    Tick max_lag = 0;
    for (const auto& [_, m] : flow.nodes) {
        period = std::min<Tick>(100000, std::lcm(period, m.shift));
        widest = std::max({widest, m.input_scope.window, m.output_scope.window});
    }
    for (const auto& e : flow.edges) {
        max_lag = std::max(max_lag, e.lag);
    }
    const Tick horizon = std::min<Tick>(200000, 2 * period + 2 * widest + 2 * max_lag + 1);

    std::map<std::pair<std::string, Tick>, std::size_t> id;
    std::vector<std::pair<const ModelSpec*, Tick>> tasks;
    for (const auto& [name, m] : flow.nodes) {
        for (Tick s = 0; s * m.shift + m.output_scope.window <= horizon; ++s) {
            id[{name, s}] = tasks.size();
            tasks.emplace_back(&m, s);
        }
    }
    std::vector<std::vector<std::size_t>> succ(tasks.size());
    std::vector<std::size_t> indeg(tasks.size(), 0);
    auto link = [&](std::size_t from, std::size_t to) {
        succ[from].push_back(to);
        ++indeg[to];
    };
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& [m, s] = tasks[i];
        for (const auto* e : flow.incoming(m->id)) {
            const auto& producer = flow.model(e->from_node);
            auto cov = resolve_producers(producer, required_producer_ticks(*m, *e, s), horizon);
            for (const auto& src : cov.sources) {
                link(id.at({producer.id, src.step}), i);
            }
        }
        if (m->stateful && s > 0) {
            link(id.at({m->id, s - 1}), i);
        }
    }
    std::queue<std::size_t> ready;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (indeg[i] == 0) {
            ready.push(i);
        }
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
        auto i = ready.front();
        ready.pop();
        ++visited;
        for (auto j : succ[i]) {
            if (--indeg[j] == 0) {
                ready.push(j);
            }
        }
    }
    if (visited != tasks.size()) {
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (indeg[i] > 0) {
                report.push_back({ViolationCode::unrolled_cycle,
                                  tasks[i].first->id + "@" + std::to_string(tasks[i].second),
                                  "lagged edges still leave a cycle between execution steps"});
                break;
            }
        }
    }
}

}  // namespace

ValidationReport validate_flow(const FlowGraph& flow, const std::set<std::string>* known_functions) {
    ValidationReport report;
    for (const auto& [key, m] : flow.nodes) {
        check_model(key, m, known_functions, report);
    }

    std::map<std::pair<std::string, std::string>, int> feed_count;
    for (const auto& e : flow.edges) {
        const auto* from = flow.find_model(e.from_node);
        const auto* to = flow.find_model(e.to_node);
        if (!from || !to) {
            report.push_back({ViolationCode::unknown_node, edge_label(e),
                              "edge references unknown node '" + (from ? e.to_node : e.from_node) + "'"});
            continue;
        }
        const auto* out = from->find_output(e.output_var);
        const auto* in = to->find_input(e.input_var);
        if (!out) {
            report.push_back({ViolationCode::unknown_variable, edge_label(e),
                              "'" + e.from_node + "' has no output variable '" + e.output_var + "'"});
        }
        if (!in) {
            report.push_back({ViolationCode::unknown_variable, edge_label(e),
                              "'" + e.to_node + "' has no input variable '" + e.input_var + "'"});
        }
        if (out && in && (out->kind != in->kind || out->width != in->width)) {
            report.push_back({ViolationCode::kind_mismatch, edge_label(e), "variable kinds differ"});
        }
        if (e.lag < 0) {
            report.push_back({ViolationCode::invalid_lag, edge_label(e), "lag must be >= 0"});
        }
        if (in) {
            ++feed_count[{e.to_node, e.input_var}];
        }
    }
    for (const auto& [id, m] : flow.nodes) {
        for (const auto& v : m.inputs) {
            const int n = feed_count[{id, v.name}];
            if (n == 0) {
                report.push_back({ViolationCode::unfed_input, id, "input '" + v.name + "' is not fed by any edge"});
            } else if (n > 1) {
                report.push_back({ViolationCode::multiply_fed_input, id,
                                  "input '" + v.name + "' is fed by " + std::to_string(n) + " edges"});
            }
        }
    }
    check_zero_lag_cycles(flow, report);

    if (report.empty()) {
        check_coverage(flow, report);
    }
    if (report.empty()) {
        check_unrolled_cycles(flow, report);
    }
    return report;
}

}  // namespace strand
