#include "fixtures.hpp"

#include "strand/core/errors.hpp"
#include "strand/store/ensemble_store.hpp"
#include "strand/store/run_log.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>

using namespace strand;
using namespace strand::store;
namespace fs = std::filesystem;

namespace {

/// Copy of `g` with random parameters, occasional large outputs (stored as
/// blobs), drop records and a final status.
EnsembleGraph enrich(const EnsembleGraph& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    EnsembleGraph out(g.run_id(), g.flow(), g.horizon());
    out.set_config({{"seed", rng() % 1000}, {"note", "random"}});
    for (std::size_t v = 0; v < g.size(); ++v) {
        auto n = g.node(v);
        n.params["alpha"] = u(rng);
        n.params["k"] = static_cast<double>(rng() % 5);
        if (!n.outputs.empty() && rng() % 5 == 0) {
            auto& s = n.outputs[0];
            s.t_end = s.t_start + static_cast<Tick>(kInlineValueLimit) + 3;
            s.values.resize(static_cast<std::size_t>(s.sample_count()));
            for (auto& x : s.values) {
                x = u(rng);
            }
        }
        std::vector<DataEdge> edges;
        for (auto e : g.in_edges(v)) {
            edges.push_back(g.edges()[e]);
        }
        out.append(n, edges);
        if (rng() % 7 == 0) {
            out.record_drop({n.model_id, n.step, {n.id}, u(rng)});
        }
    }
    out.set_status(rng() % 2 ? RunStatus::complete : RunStatus::incomplete, rng() % 2 ? "" : "stopped early");
    return out;
}

}  // namespace

TEST_CASE("save then load is canonical equality on random graphs") {
    std::mt19937_64 rng(77);
    const auto root = strand::testing::scratch_dir("store-roundtrip");
    for (int i = 0; i < 100; ++i) {
        const auto g = enrich(strand::testing::random_graph(rng, 4 + rng() % 40), rng);
        const auto dir = root / std::to_string(i);
        save_run(g, dir);
        const auto back = load_run(dir);
        REQUIRE(back == g);
    }
}

TEST_CASE("a truncated log loads as its valid prefix, marked incomplete") {
    std::mt19937_64 rng(78);
    const auto root = strand::testing::scratch_dir("store-truncate");
    for (int i = 0; i < 40; ++i) {
        auto g = enrich(strand::testing::random_graph(rng, 6 + rng() % 20), rng);
        g.set_status(RunStatus::complete);
        const auto dir = root / std::to_string(i);
        save_run(g, dir);
        const auto log = dir / kRunLogName;
        const auto size = fs::file_size(log);
        const auto cut = 1 + rng() % (size - 1);
        fs::resize_file(log, cut);

        EnsembleGraph back;
        try {
            back = load_run(dir);
        } catch (const UnknownRun&) {
            // Cut inside the header: nothing to recover.
            continue;
        }
        CHECK(back.status() == RunStatus::incomplete);
        REQUIRE(back.size() <= g.size());
        for (std::size_t v = 0; v < back.size(); ++v) {
            CHECK(back.node(v) == g.node(v));
        }
        for (std::size_t e = 0; e < back.edges().size(); ++e) {
            CHECK(back.edges()[e] == g.edges()[e]);
        }
    }
}

TEST_CASE("run store rejects bad appends without writing") {
    const auto root = strand::testing::scratch_dir("store-append");
    const auto flow = strand::testing::two_branch_graph().flow();
    RunStore rs(root / "r", "run-x", flow, 1, nlohmann::json::object(), false);
    SimulationInstance a;
    a.id = "a:0:0";
    a.model_id = "a";
    a.window = {0, 1};
    a.outputs.push_back(strand::testing::constant_series("x", a.window, 1.0));
    rs.append_instance(a, {});
    const auto before = fs::file_size(root / "r" / kRunLogName);
    CHECK_THROWS_AS(rs.append_instance(a, {}), DuplicateId);
    SimulationInstance b;
    b.id = "b:0:0";
    b.model_id = "b";
    b.window = {0, 1};
    CHECK_THROWS_AS(rs.append_instance(b, {{"a:0:9", "b:0:0", "x", "x", {0, 1}}}), UnknownParent);
    CHECK(fs::file_size(root / "r" / kRunLogName) == before);
    rs.finish(RunStatus::complete);
    const auto back = load_run(root / "r");
    CHECK(back.size() == 1);
    CHECK(back.status() == RunStatus::complete);
}

TEST_CASE("provenance equals reverse reachability") {
    std::mt19937_64 rng(79);
    for (int i = 0; i < 100; ++i) {
        const auto g = strand::testing::random_graph(rng, 30);
        for (std::size_t v = 0; v < g.size(); ++v) {
            const auto p = provenance(g, v);
            const auto oracle = strand::testing::reverse_bfs(g, v);
            REQUIRE(std::set<std::size_t>(p.nodes.begin(), p.nodes.end()) == oracle);
            CHECK(std::is_sorted(p.nodes.begin(), p.nodes.end()));
            for (auto e : p.edges) {
                CHECK(oracle.count(g.index_of(g.edges()[e].from)));
                CHECK(oracle.count(g.index_of(g.edges()[e].to)));
            }
        }
    }
    const auto g = strand::testing::two_branch_graph();
    CHECK(provenance(g, "a:0:0").nodes == std::vector<std::size_t>{0});
    CHECK_THROWS_AS(provenance(g, "zz:0:0"), UnknownInstance);
}

TEST_CASE("ensemble store lists runs and reports creation time") {
    const auto root = strand::testing::scratch_dir("store-list");
    EnsembleStore store(root);
    const auto g = strand::testing::two_branch_graph();
    {
        auto rs = store.create("run-b", g.flow(), 1, nlohmann::json::object(), false);
        rs->finish(RunStatus::complete);
    }
    {
        auto rs = store.create("run-a", g.flow(), 1, nlohmann::json::object(), false);
    }
    CHECK(store.list() == std::vector<std::string>{"run-a", "run-b"});
    CHECK(store.exists("run-a"));
    CHECK_FALSE(store.exists("run-zz"));
    CHECK_THROWS_AS(store.load("run-zz"), UnknownRun);
    const auto created = store.created_at("run-a");
    CHECK(created.size() == 20);
    CHECK(created.back() == 'Z');
    fs::remove(root / "run-a" / kCreatedName);
    CHECK(store.created_at("run-a").size() == 20);
}
