#include "strand/timeline/extract.hpp"

#include "strand/core/errors.hpp"
#include "strand/core/hash.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <set>

namespace strand::timeline {

std::string DiversityConfig::check() const {
    if (k < 1) {
        return "k must be >= 1";
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        return "lambda must be in [0, 1]";
    }
    if (beam_width < 1) {
        return "beam_width must be >= 1";
    }
    return {};
}

std::string timeline_id(const std::string& run_id, const std::vector<std::string>& node_ids,
                        const PreferenceCriterion& criterion) {
    std::string text = run_id + '\n' + to_json(criterion).dump();
    for (const auto& id : node_ids) {
        text += '\n';
        text += id;
    }
    return "tl-" + sha256_hex(text).substr(0, 16);
}

namespace {

bool overlaps(const TickRange& a, const TickRange& b) { return a.lo < b.hi && b.lo < a.hi; }

bool conflicts(const store::EnsembleGraph& g, std::size_t a, std::size_t b) {
    const auto& x = g.node(a);
    const auto& y = g.node(b);
    return x.model_id == y.model_id && overlaps(x.window, y.window);
}

/// Parents present and no same-model overlap with the members.
bool includable(const store::EnsembleGraph& g, std::size_t v, const std::vector<char>& in,
                const std::vector<std::size_t>& members) {
    for (auto p : g.parents(v)) {
        if (!in[p]) {
            return false;
        }
    }
    for (auto m : members) {
        if (conflicts(g, v, m)) {
            return false;
        }
    }
    return true;
}

}  // namespace

std::vector<NodeSet> enumerate_timelines(const store::EnsembleGraph& graph, std::size_t limit) {
    const std::size_t n = graph.size();
    if (n > limit) {
        throw TooLarge("graph has " + std::to_string(n) + " nodes; the enumeration limit is " + std::to_string(limit));
    }
    // An includable node may only be left out if some later node can block it.
    std::vector<char> has_later_blocker(n, 0);
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t u = v + 1; u < n; ++u) {
            if (eligible(graph, u) && conflicts(graph, v, u)) {
                has_later_blocker[v] = 1;
                break;
            }
        }
    }
    std::vector<NodeSet> out;
    std::vector<char> in(n, 0);
    std::vector<std::size_t> members;
    auto rec = [&](auto&& self, std::size_t v) -> void {
        if (v == n) {
            if (is_maximal(graph, members)) {
                out.push_back(members);
            }
            return;
        }
        if (!eligible(graph, v) || !includable(graph, v, in, members)) {
            self(self, v + 1);
            return;
        }
        in[v] = 1;
        members.push_back(v);
        self(self, v + 1);
        members.pop_back();
        in[v] = 0;
        if (has_later_blocker[v]) {
            self(self, v + 1);
        }
    };
    rec(rec, 0);
    std::sort(out.begin(), out.end());
    return out;
}

double coverage(const store::EnsembleGraph& graph, std::span<const std::size_t> nodes) {
    const Tick horizon = graph.horizon();
    const auto models = graph.flow().nodes.size();
    if (horizon <= 0 || models == 0) {
        return 0.0;
    }
    std::map<std::string_view, std::vector<TickRange>> by_model;
    for (auto v : nodes) {
        const auto& n = graph.node(v);
        const TickRange w{std::max<Tick>(n.window.lo, 0), std::min(n.window.hi, horizon)};
        if (!w.empty()) {
            by_model[n.model_id].push_back(w);
        }
    }
    Tick covered = 0;
    for (auto& [model, ws] : by_model) {
        std::sort(ws.begin(), ws.end(), [](const TickRange& a, const TickRange& b) { return a.lo < b.lo; });
        Tick end = std::numeric_limits<Tick>::min();
        for (const auto& w : ws) {
            const Tick lo = std::max(w.lo, end);
            if (w.hi > lo) {
                covered += w.hi - lo;
            }
            end = std::max(end, w.hi);
        }
    }
    return static_cast<double>(covered) / (static_cast<double>(horizon) * static_cast<double>(models));
}

namespace {

std::vector<std::size_t> model_members(const store::EnsembleGraph& graph, std::span<const std::size_t> nodes,
                                       const std::string& model) {
    std::vector<std::size_t> out;
    for (auto v : nodes) {
        if (graph.node(v).model_id == model) {
            out.push_back(v);
        }
    }
    std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = graph.node(a);
        const auto& y = graph.node(b);
        if (x.window.lo != y.window.lo) {
            return x.window.lo < y.window.lo;
        }
        if (x.step != y.step) {
            return x.step < y.step;
        }
        return x.id < y.id;
    });
    return out;
}

double term_value(const store::EnsembleGraph& graph, std::span<const std::size_t> nodes, const CriterionTerm& term) {
    std::vector<double> series;
    for (auto v : model_members(graph, nodes, term.model)) {
        if (const auto* o = graph.node(v).output(term.variable)) {
            series.insert(series.end(), o->values.begin(), o->values.end());
        }
    }
    if (series.empty()) {
        return 0.0;
    }
    if (term.direction == Direction::match) {
        const auto len = std::min(series.size(), term.target.size());
        if (len == 0) {
            return 0.0;
        }
        double sq = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            const double d = series[i] - term.target[i];
            sq += d * d;
        }
        return -sq / static_cast<double>(len);
    }
    double sum = 0.0;
    for (auto x : series) {
        sum += x;
    }
    const double mean = sum / static_cast<double>(series.size());
    return term.direction == Direction::maximize ? mean : -mean;
}

}  // namespace

double score_timeline(const store::EnsembleGraph& graph, std::span<const std::size_t> nodes,
                      const PreferenceCriterion& criterion) {
    criterion.check_against(graph.flow());
    NodeSet sorted(nodes.begin(), nodes.end());
    std::sort(sorted.begin(), sorted.end());
    double score = 0.0;
    for (const auto& term : criterion.terms) {
        if (term.weight != 0.0) {
            score += term.weight * term_value(graph, sorted, term);
        }
    }
    if (criterion.coverage_weight != 0.0) {
        score += criterion.coverage_weight * coverage(graph, sorted);
    }
    return score;
}

Timeline make_timeline(const store::EnsembleGraph& graph, NodeSet nodes, const PreferenceCriterion& criterion) {
    std::sort(nodes.begin(), nodes.end());
    Timeline t;
    t.run_id = graph.run_id();
    for (auto v : nodes) {
        t.node_ids.push_back(graph.node(v).id);
    }
    t.id = timeline_id(t.run_id, t.node_ids, criterion);
    t.coverage = coverage(graph, nodes);
    t.score = score_timeline(graph, nodes, criterion);
    t.nodes = std::move(nodes);
    return t;
}

namespace {

/// Groups eligible nodes into (model, step) slots ordered so that every
/// parent's slot precedes its child's. Falls back to one slot per node when
/// the slot graph is cyclic.
std::vector<std::vector<std::size_t>> branch_slots(const store::EnsembleGraph& g) {
    std::map<std::pair<std::string, Tick>, std::size_t> index;
    std::vector<std::vector<std::size_t>> slots;
    std::vector<std::size_t> slot_of(g.size(), 0);
    for (std::size_t v = 0; v < g.size(); ++v) {
        if (!eligible(g, v)) {
            continue;
        }
        const auto& n = g.node(v);
        auto [it, fresh] = index.try_emplace({n.model_id, n.step}, slots.size());
        if (fresh) {
            slots.emplace_back();
        }
        slots[it->second].push_back(v);
        slot_of[v] = it->second;
    }
    const auto m = slots.size();
    std::vector<std::set<std::size_t>> succ(m);
    std::vector<std::size_t> indeg(m, 0);
    for (std::size_t s = 0; s < m; ++s) {
        for (auto v : slots[s]) {
            for (auto p : g.parents(v)) {
                const auto ps = slot_of[p];
                if (ps != s && succ[ps].insert(s).second) {
                    ++indeg[s];
                }
            }
        }
    }
    // Kahn's algorithm, smallest first node index first.
    using Item = std::pair<std::size_t, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> ready;
    for (std::size_t s = 0; s < m; ++s) {
        if (indeg[s] == 0) {
            ready.push({slots[s].front(), s});
        }
    }
    std::vector<std::vector<std::size_t>> ordered;
    while (!ready.empty()) {
        const auto s = ready.top().second;
        ready.pop();
        ordered.push_back(slots[s]);
        for (auto t : succ[s]) {
            if (--indeg[t] == 0) {
                ready.push({slots[t].front(), t});
            }
        }
    }
    if (ordered.size() != m) {
        ordered.clear();
        for (std::size_t v = 0; v < g.size(); ++v) {
            if (eligible(g, v)) {
                ordered.push_back({v});
            }
        }
    }
    return ordered;
}

struct BeamState {
    std::vector<char> in;
    std::vector<std::size_t> members;
    /// Left out while includable; must end up blocked by a later member.
    std::vector<std::size_t> pending;
    double score = 0.0;
    std::string key;
};

std::string ids_key(const store::EnsembleGraph& g, std::vector<std::size_t> members) {
    std::sort(members.begin(), members.end());
    std::string key;
    for (auto v : members) {
        key += g.node(v).id;
        key += '\n';
    }
    return key;
}

/// Every includable node taken in index order: always maximal.
NodeSet greedy_timeline(const store::EnsembleGraph& g) {
    std::vector<char> in(g.size(), 0);
    std::vector<std::size_t> members;
    for (std::size_t v = 0; v < g.size(); ++v) {
        if (eligible(g, v) && includable(g, v, in, members)) {
            in[v] = 1;
            members.push_back(v);
        }
    }
    return members;
}

bool better(const Timeline& a, const Timeline& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.node_ids < b.node_ids;
}

}  // namespace

std::vector<Timeline> candidate_pool(const store::EnsembleGraph& graph, const PreferenceCriterion& criterion,
                                     const DiversityConfig& diversity) {
    if (auto why = diversity.check(); !why.empty()) {
        throw Error("invalid diversity config: " + why);
    }
    criterion.check_against(graph.flow());
    const bool exact = graph.size() <= diversity.exact_limit;
    const auto width = exact ? std::numeric_limits<std::size_t>::max() : diversity.beam_width;

    const auto slots = branch_slots(graph);
    std::vector<std::ptrdiff_t> slot_pos(graph.size(), -1);
    for (std::size_t s = 0; s < slots.size(); ++s) {
        for (auto v : slots[s]) {
            slot_pos[v] = static_cast<std::ptrdiff_t>(s);
        }
    }
    // Last slot that could still block a node left out at its own slot.
    std::vector<std::ptrdiff_t> last_blocker(graph.size(), -1);
    for (std::size_t v = 0; v < graph.size(); ++v) {
        for (std::size_t u = 0; u < graph.size(); ++u) {
            if (u != v && slot_pos[u] > slot_pos[v] && conflicts(graph, u, v)) {
                last_blocker[v] = std::max(last_blocker[v], slot_pos[u]);
            }
        }
    }

    std::vector<BeamState> beam(1);
    beam[0].in.assign(graph.size(), 0);
    for (std::size_t s = 0; s < slots.size(); ++s) {
        const auto pos = static_cast<std::ptrdiff_t>(s);
        std::vector<BeamState> next;
        for (const auto& st : beam) {
            std::vector<std::size_t> open;
            for (auto c : slots[s]) {
                if (includable(graph, c, st.in, st.members)) {
                    open.push_back(c);
                }
            }
            auto settle = [&](BeamState child) {
                std::erase_if(child.pending, [&](std::size_t v) {
                    return std::any_of(child.members.begin(), child.members.end(),
                                       [&](std::size_t m) { return conflicts(graph, v, m); });
                });
                for (auto v : child.pending) {
                    if (last_blocker[v] <= pos) {
                        return;
                    }
                }
                next.push_back(std::move(child));
            };
            for (auto c : open) {
                BeamState child = st;
                child.in[c] = 1;
                child.members.push_back(c);
                settle(std::move(child));
            }
            BeamState skip = st;
            skip.pending.insert(skip.pending.end(), open.begin(), open.end());
            settle(std::move(skip));
        }
        for (auto& st : next) {
            st.score = score_timeline(graph, st.members, criterion);
            st.key = ids_key(graph, st.members);
        }
        std::sort(next.begin(), next.end(), [](const BeamState& a, const BeamState& b) {
            if (a.score != b.score) {
                return a.score > b.score;
            }
            return a.key < b.key;
        });
        if (next.size() > width) {
            next.resize(width);
        }
        beam = std::move(next);
    }

    std::set<NodeSet> seen;
    std::vector<Timeline> pool;
    auto offer = [&](NodeSet members) {
        std::sort(members.begin(), members.end());
        if (!seen.insert(members).second) {
            return;
        }
        if (!is_maximal(graph, members)) {
            return;
        }
        pool.push_back(make_timeline(graph, std::move(members), criterion));
    };
    for (auto& st : beam) {
        if (st.pending.empty()) {
            offer(std::move(st.members));
        }
    }
    offer(greedy_timeline(graph));
    std::sort(pool.begin(), pool.end(), better);
    return pool;
}

std::vector<Timeline> select_mmr(std::vector<Timeline> pool, std::size_t k, double lambda) {
    std::vector<Timeline> chosen;
    if (pool.empty()) {
        return chosen;
    }
    double lo = pool.front().score;
    double hi = pool.front().score;
    for (const auto& t : pool) {
        lo = std::min(lo, t.score);
        hi = std::max(hi, t.score);
    }
    auto normalized = [&](double s) { return hi > lo ? (s - lo) / (hi - lo) : 1.0; };

    std::vector<double> max_sim(pool.size(), 0.0);
    std::vector<char> taken(pool.size(), 0);
    while (chosen.size() < k && chosen.size() < pool.size()) {
        std::size_t best = pool.size();
        double best_value = 0.0;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (taken[i]) {
                continue;
            }
            const double value = (1.0 - lambda) * normalized(pool[i].score) - lambda * max_sim[i];
            if (best == pool.size() || value > best_value ||
                (value == best_value && better(pool[i], pool[best]))) {
                best = i;
                best_value = value;
            }
        }
        taken[best] = 1;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (!taken[i]) {
                max_sim[i] = std::max(max_sim[i], jaccard(pool[i].nodes, pool[best].nodes));
            }
        }
        chosen.push_back(pool[best]);
    }
    return chosen;
}

std::vector<Timeline> extract_top_k(const store::EnsembleGraph& graph, const PreferenceCriterion& criterion,
                                    const DiversityConfig& diversity) {
    return select_mmr(candidate_pool(graph, criterion, diversity), diversity.k, diversity.lambda);
}

SeriesWindow timeline_series(const store::EnsembleGraph& graph, std::span<const std::size_t> nodes,
                             const std::string& model, const std::string& variable) {
    const auto* spec = graph.flow().find_model(model);
    if (!spec) {
        throw UnknownVariable("unknown model '" + model + "'");
    }
    const auto* var = spec->find_output(variable);
    if (!var) {
        throw UnknownVariable("model '" + model + "' has no output '" + variable + "'");
    }
    SeriesWindow out;
    out.variable = variable;
    out.resolution = spec->output_scope.resolution;
    out.width = var->width;
    std::vector<const store::SimulationInstance*> members;
    for (auto v : nodes) {
        const auto& n = graph.node(v);
        if (n.model_id == model && n.output(variable)) {
            members.push_back(&n);
        }
    }
    if (members.empty()) {
        return out;
    }
    std::sort(members.begin(), members.end(), [](const auto* a, const auto* b) { return a->step < b->step; });
    Tick lo = members.front()->window.lo;
    Tick hi = members.front()->window.hi;
    for (const auto* m : members) {
        lo = std::min(lo, m->window.lo);
        hi = std::max(hi, m->window.hi);
    }
    const Tick res = out.resolution;
    hi = lo + (hi - lo + res - 1) / res * res;
    out.t_start = lo;
    out.t_end = hi;
    const auto samples = static_cast<std::size_t>((hi - lo) / res);
    out.values.assign(samples * static_cast<std::size_t>(out.width), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < samples; ++k) {
        const Tick t = lo + static_cast<Tick>(k) * res;
        for (auto it = members.rbegin(); it != members.rend(); ++it) {
            const auto* o = (*it)->output(variable);
            if (o->range().contains(t)) {
                for (int c = 0; c < out.width; ++c) {
                    out.values[k * static_cast<std::size_t>(out.width) + static_cast<std::size_t>(c)] = o->at_tick(t, c);
                }
                break;
            }
        }
    }
    return out;
}

}  // namespace strand::timeline
