#include "fixtures.hpp"

#include "strand/core/errors.hpp"
#include "strand/timeline/export.hpp"
#include "strand/timeline/extract.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

using namespace strand;
using namespace strand::timeline;
using strand::testing::brute_force_timelines;

namespace {

std::size_t ok_count(const store::EnsembleGraph& g) {
    std::size_t n = 0;
    for (std::size_t v = 0; v < g.size(); ++v) {
        n += eligible(g, v);
    }
    return n;
}

NodeSet ids_to_set(const store::EnsembleGraph& g, std::vector<std::string> ids) { return resolve(g, ids); }

/// Direct recomputation of the score definition.
double oracle_score(const store::EnsembleGraph& g, const NodeSet& nodes, const PreferenceCriterion& c) {
    double total = 0.0;
    for (const auto& term : c.terms) {
        std::vector<const store::SimulationInstance*> members;
        for (auto v : nodes) {
            if (g.node(v).model_id == term.model) {
                members.push_back(&g.node(v));
            }
        }
        std::sort(members.begin(), members.end(), [](auto* a, auto* b) { return a->window.lo < b->window.lo; });
        std::vector<double> xs;
        for (auto* m : members) {
            const auto* s = m->output(term.variable);
            xs.insert(xs.end(), s->values.begin(), s->values.end());
        }
        if (xs.empty()) {
            continue;
        }
        double v = 0.0;
        if (term.direction == Direction::match) {
            const auto n = std::min(xs.size(), term.target.size());
            for (std::size_t i = 0; i < n; ++i) {
                v -= (xs[i] - term.target[i]) * (xs[i] - term.target[i]);
            }
            v = n ? v / static_cast<double>(n) : 0.0;
        } else {
            for (double x : xs) {
                v += x;
            }
            v /= static_cast<double>(xs.size());
            if (term.direction == Direction::minimize) {
                v = -v;
            }
        }
        total += term.weight * v;
    }
    std::size_t covered = 0;
    for (const auto& [model, spec] : g.flow().nodes) {
        for (Tick t = 0; t < g.horizon(); ++t) {
            bool hit = false;
            for (auto v : nodes) {
                hit = hit || (g.node(v).model_id == model && g.node(v).window.contains(t));
            }
            covered += hit;
        }
    }
    const double cov = static_cast<double>(covered) / static_cast<double>(g.flow().nodes.size() * g.horizon());
    return total + c.coverage_weight * cov;
}

}  // namespace

TEST_CASE("two-branch fixture has exactly the two paired timelines") {
    const auto g = strand::testing::two_branch_graph();
    const auto expect = std::vector<NodeSet>{ids_to_set(g, {"a:0:0", "b:0:0"}), ids_to_set(g, {"a:0:1", "b:0:1"})};
    CHECK(brute_force_timelines(g) == expect);
    CHECK(enumerate_timelines(g) == expect);

    const auto c = strand::testing::maximize("b", "y");
    const auto both = extract_top_k(g, c, {2, 1.0});
    REQUIRE(both.size() == 2);
    std::vector<NodeSet> got{both[0].nodes, both[1].nodes};
    std::sort(got.begin(), got.end());
    CHECK(got == expect);
    CHECK(extract_top_k(g, c, {5, 0.0}).size() == 2);

    const auto best = extract_top_k(g, c, {1, 0.0});
    REQUIRE(best.size() == 1);
    CHECK(best[0].nodes == expect[1]);
}

TEST_CASE("diversity weight switches the runner-up to the disjoint timeline") {
    const auto g = strand::testing::three_timeline_graph();
    const auto c = strand::testing::maximize("b", "y");
    const auto near = extract_top_k(g, c, {2, 0.0});
    REQUIRE(near.size() == 2);
    CHECK(near[0].nodes == ids_to_set(g, {"a:0:0", "b:0:0"}));
    CHECK(near[1].nodes == ids_to_set(g, {"a:0:0", "b:0:1"}));
    const auto far = extract_top_k(g, c, {2, 1.0});
    REQUIRE(far.size() == 2);
    CHECK(far[0].nodes == near[0].nodes);
    CHECK(far[1].nodes == ids_to_set(g, {"a:0:1", "b:0:2"}));
}

TEST_CASE("enumeration agrees with brute force over all subsets") {
    std::mt19937_64 rng(101);
    int checked = 0;
    while (checked < 150) {
        const auto g = strand::testing::random_graph(rng, 18);
        if (ok_count(g) > 16) {
            continue;
        }
        REQUIRE(enumerate_timelines(g) == brute_force_timelines(g));
        ++checked;
    }
}

TEST_CASE("is_maximal agrees with the superset oracle") {
    std::mt19937_64 rng(102);
    for (int i = 0; i < 100; ++i) {
        const auto g = strand::testing::random_graph(rng, 14);
        const auto maximal = brute_force_timelines(g);
        // Every closed consistent set is maximal exactly when the oracle lists it.
        std::vector<std::size_t> ok;
        for (std::size_t v = 0; v < g.size(); ++v) {
            if (eligible(g, v)) {
                ok.push_back(v);
            }
        }
        for (std::uint32_t mask = 0; mask < (1u << ok.size()); ++mask) {
            NodeSet s;
            for (std::size_t j = 0; j < ok.size(); ++j) {
                if (mask >> j & 1u) {
                    s.push_back(ok[j]);
                }
            }
            if (!is_consistent(g, s) || !is_causally_closed(g, s)) {
                continue;
            }
            CHECK(is_maximal(g, s) == std::binary_search(maximal.begin(), maximal.end(), s));
        }
    }
    const auto g = strand::testing::two_branch_graph();
    CHECK_THROWS_AS(is_maximal(g, NodeSet{0, 1}), InconsistentInput);
    CHECK_THROWS_AS(is_maximal(g, NodeSet{2}), InconsistentInput);
}

TEST_CASE("extracted timelines are sound and match the oracle") {
    std::mt19937_64 rng(103);
    for (int i = 0; i < 200; ++i) {
        const auto g = strand::testing::random_graph(rng, 24);
        const auto c = strand::testing::random_criterion(rng);
        const auto oracle = enumerate_timelines(g);
        const auto k = 1 + rng() % 4;
        const double lambda = static_cast<double>(rng() % 3) / 2.0;
        const auto found = extract_top_k(g, c, {k, lambda});
        CHECK(found.size() == std::min(k, oracle.size()));
        for (const auto& t : found) {
            CHECK(is_consistent(g, t.nodes));
            CHECK(is_causally_closed(g, t.nodes));
            CHECK(is_maximal(g, t.nodes));
            CHECK(std::binary_search(oracle.begin(), oracle.end(), t.nodes));
            CHECK(t.score == oracle_score(g, t.nodes, c));
        }
        double best = -INFINITY;
        for (const auto& s : oracle) {
            best = std::max(best, score_timeline(g, s, c));
        }
        const auto top = extract_top_k(g, c, {1, 0.0});
        if (!oracle.empty()) {
            REQUIRE(top.size() == 1);
            CHECK(top[0].score == best);
        }
    }
}

TEST_CASE("enumeration refuses oversized graphs") {
    std::mt19937_64 rng(104);
    store::EnsembleGraph g;
    do {
        g = strand::testing::random_graph(rng, 40);
    } while (g.size() <= 24);
    CHECK_THROWS_AS(enumerate_timelines(g), TooLarge);
}

TEST_CASE("beam extraction on larger graphs returns maximal timelines") {
    std::mt19937_64 rng(105);
    for (int i = 0; i < 20; ++i) {
        const auto g = strand::testing::random_graph(rng, 60);
        const auto c = strand::testing::random_criterion(rng);
        for (const auto& t : extract_top_k(g, c, {4, 0.5, 8})) {
            CHECK(is_consistent(g, t.nodes));
            CHECK(is_causally_closed(g, t.nodes));
            CHECK(is_maximal(g, t.nodes));
        }
    }
}

TEST_CASE("scores order hand-built timelines by recomputed means") {
    FlowGraph f;
    f.name = "seir-ish";
    f.nodes["city"] = strand::testing::make_model("city", {}, {"I"}, 2, 2);
    strand::testing::GraphBuilder b(f, 4);
    b.add("city", 0, 0, {}, 10.0);
    b.add("city", 0, 1, {}, 30.0);
    b.add("city", 1, 0, {}, 40.0);
    const auto& g = b.graph();
    const auto c = strand::testing::maximize("city", "I");
    const NodeSet low{0, 2};
    const NodeSet high{1, 2};
    CHECK(score_timeline(g, low, c) == (10.0 + 40.0) / 2);
    CHECK(score_timeline(g, high, c) == (30.0 + 40.0) / 2);

    PreferenceCriterion match;
    match.terms.push_back({"city", "I", Direction::match, {10.0, 10.0, 10.0}, 2.0});
    // Series [10, 10, 40, 40] against three targets of 10.
    CHECK(score_timeline(g, low, match) == -2.0 * (30.0 * 30.0) / 3.0);
    CHECK(score_timeline(g, low, match) == oracle_score(g, low, match));

    PreferenceCriterion absent;
    absent.terms.push_back({"ghost", "I", Direction::maximize, {}, 1.0});
    CHECK_THROWS_AS(score_timeline(g, low, absent), UnknownVariable);
}

TEST_CASE("coverage counts covered (tick, model) pairs") {
    const auto g = strand::testing::two_branch_graph();
    CHECK(coverage(g, NodeSet{0, 2}) == 1.0);
    CHECK(coverage(g, NodeSet{0}) == 0.5);
    CHECK(coverage(g, NodeSet{}) == 0.0);
}

TEST_CASE("MMR with zero diversity weight keeps score order") {
    std::mt19937_64 rng(106);
    for (int i = 0; i < 50; ++i) {
        std::vector<Timeline> pool;
        for (int j = 0; j < 8; ++j) {
            Timeline t;
            t.id = "t" + std::to_string(j);
            t.score = static_cast<double>(rng() % 5);
            for (std::size_t v = 0; v < 6; ++v) {
                if (rng() % 2) {
                    t.nodes.push_back(v);
                }
            }
            pool.push_back(t);
        }
        auto sorted = pool;
        std::stable_sort(sorted.begin(), sorted.end(), [](const Timeline& a, const Timeline& b) { return a.score > b.score; });
        const auto picked = select_mmr(pool, 5, 0.0);
        REQUIRE(picked.size() == 5);
        for (std::size_t j = 0; j < 5; ++j) {
            CHECK(picked[j].score == sorted[j].score);
        }
        CHECK(select_mmr(pool, 20, 0.3).size() == pool.size());
    }
    CHECK(jaccard(NodeSet{1, 2, 3}, NodeSet{2, 3, 4}) == 0.5);
    CHECK(jaccard(NodeSet{}, NodeSet{}) == 1.0);
}

TEST_CASE("timeline series stitch members and mark gaps") {
    FlowGraph f;
    f.name = "stitch";
    f.nodes["m"] = strand::testing::make_model("m", {}, {"v"}, 2, 1);
    strand::testing::GraphBuilder b(f, 6);
    b.add("m", 0, 0, {}, 1.0);
    b.add("m", 1, 0, {}, 2.0);
    b.add("m", 4, 0, {}, 5.0);
    const auto s = timeline_series(b.graph(), NodeSet{0, 1, 2}, "m", "v");
    CHECK(s.t_start == 0);
    CHECK(s.t_end == 6);
    REQUIRE(s.values.size() == 6);
    CHECK(s.values[0] == 1.0);
    CHECK(s.values[1] == 2.0);
    CHECK(s.values[2] == 2.0);
    CHECK(std::isnan(s.values[3]));
    CHECK(s.values[4] == 5.0);
    CHECK_THROWS_AS(timeline_series(b.graph(), NodeSet{0}, "m", "nope"), UnknownVariable);
}

TEST_CASE("criterion files parse and round-trip") {
    const auto c = load_criterion(strand::testing::data_path("demo_criterion.yaml").string());
    REQUIRE(c.terms.size() == 2);
    CHECK(c.terms[0].direction == Direction::minimize);
    CHECK(c.coverage_weight == 1.0);
    CHECK(criterion_from_json(to_json(c)) == c);
    try {
        parse_criterion("terms:\n  - {model: a, variable: x, direction: sideways}\n");
        FAIL("bad direction accepted");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_criterion("terms: []\n"), Error);
    CHECK_THROWS_AS(criterion_from_json({{"terms", {{{"model", "a"}}}}}), Error);
}

TEST_CASE("export records carry series, score and a stable id") {
    const auto g = strand::testing::two_branch_graph();
    const auto c = strand::testing::maximize("b", "y");
    const auto t = extract_top_k(g, c, {1, 0.0}).at(0);
    const auto rec = export_timeline(g, t, c);
    CHECK(rec.at("format") == kTimelineFormat);
    CHECK(rec.at("version") == kTimelineVersion);
    CHECK(rec.at("timeline_id") == t.id);
    CHECK(rec.at("score").get<double>() == score_timeline(g, t.nodes, c));
    CHECK(rec.at("series").at("b").at("y").at("values") == nlohmann::json::array({4.0}));
    CHECK(t.id == timeline_id(g.run_id(), t.node_ids, c));
    auto other = c;
    other.coverage_weight = 1.0;
    CHECK(t.id != timeline_id(g.run_id(), t.node_ids, other));

    const auto dir = strand::testing::scratch_dir("timeline-export");
    const auto p1 = write_timeline_export(dir, rec);
    const auto first = nlohmann::json::parse(std::ifstream(p1));
    write_timeline_export(dir, rec);
    CHECK(nlohmann::json::parse(std::ifstream(p1)) == first);
    CHECK(p1.filename() == t.id + ".json");
}
