#include "fixtures.hpp"

#include "strand/core/flow_io.hpp"
#include "strand/engine/run.hpp"
#include "strand/scenario/models.hpp"
#include "strand/service/api.hpp"
#include "strand/service/schema.hpp"
#include "strand/store/run_log.hpp"
#include "strand/timeline/extract.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <thread>

using namespace strand;
using namespace strand::service;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    fs::path root;
    std::unique_ptr<ApiService> api;

    explicit Fixture(const std::string& name, std::chrono::milliseconds budget = std::chrono::milliseconds(10000)) {
        root = strand::testing::scratch_dir(name);
        auto g = strand::testing::two_branch_graph();
        g.set_status(store::RunStatus::complete);
        store::save_run(g, root / g.run_id());
        ServiceConfig cfg;
        cfg.store_root = root;
        cfg.time_budget = budget;
        api = std::make_unique<ApiService>(cfg);
    }

    Response get(const std::string& path, std::map<std::string, std::string> query = {}) {
        return api->handle({"GET", path, std::move(query), ""});
    }
    Response post(const std::string& path, const std::string& body) { return api->handle({"POST", path, {}, body}); }
};

/// The response validates against the schema it names, which is the one
/// the endpoint publishes.
void check_contract(const Response& r, const std::string& expected_schema) {
    INFO(r.body.dump());
    REQUIRE(r.schema == expected_schema);
    const auto errors = validate_payload(r.schema, r.body);
    for (const auto& e : errors) {
        UNSCOPED_INFO(e.path << ": " << e.message);
    }
    CHECK(errors.empty());
}

json request_body(double lambda, std::size_t k) {
    return {{"criterion", {{"terms", json::array({{{"model", "b"}, {"variable", "y"}, {"direction", "maximize"}}})}}},
            {"diversity", {{"k", k}, {"lambda", lambda}}}};
}

std::set<std::string> error_paths(const Response& r) {
    std::set<std::string> out;
    for (const auto& f : r.body.value("fields", json::array())) {
        out.insert(f.at("path").get<std::string>());
    }
    return out;
}

}  // namespace

TEST_CASE("every read endpoint answers with its published schema") {
    Fixture f("svc-contract");
    const std::string run = "/api/runs/run-two-branch";
    check_contract(f.get("/api/runs"), "run_list");
    CHECK(f.get("/api/runs").body.at("runs").size() == 1);
    check_contract(f.get(run), "run_summary");
    check_contract(f.get(run + "/graph"), "graph_page");
    check_contract(f.get(run + "/instances/b:0:1/provenance"), "provenance");

    const auto ex = f.post(run + "/timelines", request_body(0.0, 2).dump());
    REQUIRE(ex.status == 200);
    check_contract(ex, "extraction");
    const auto id = ex.body.at("request_id").get<std::string>();
    check_contract(f.get(run + "/extractions/" + id), "extraction");
    const auto tid = ex.body.at("timelines")[0].at("timeline_id").get<std::string>();
    check_contract(f.get(run + "/timelines/" + tid), "timeline_detail");
    const auto exported = f.post(run + "/timelines/" + tid + "/export", "");
    check_contract(exported, "export_result");
    CHECK(fs::exists(exported.body.at("path").get<std::string>()));

    const auto schemas = f.get("/api/schemas");
    CHECK(schemas.body.at("$defs").contains("timeline_request"));
    CHECK(f.get("/api/schemas/node").body == api_schemas().at("$defs").at("node"));
}

TEST_CASE("errors carry status codes and field paths") {
    Fixture f("svc-errors");
    const std::string run = "/api/runs/run-two-branch";
    auto r = f.get("/api/runs/run-missing");
    CHECK(r.status == 404);
    check_contract(r, "error");
    CHECK(f.get("/api/runs/run-missing/graph").status == 404);
    CHECK(f.post("/api/runs/run-missing/timelines", request_body(0, 1).dump()).status == 404);
    CHECK(f.get(run + "/instances/zz:0:0/provenance").status == 404);
    CHECK(f.get(run + "/timelines/tl-nothing").status == 404);
    CHECK(f.get(run + "/extractions/ex-nothing").status == 404);
    CHECK(f.get("/api/schemas/nothing").status == 404);
    CHECK(f.get("/api/nowhere").status == 404);

    r = f.post(run + "/timelines", "{not json");
    CHECK(r.status == 400);
    check_contract(r, "error");

    auto body = request_body(0, 1);
    body["diversity"]["k"] = 0;
    body["criterion"]["terms"][0]["direction"] = "sideways";
    r = f.post(run + "/timelines", body.dump());
    CHECK(r.status == 422);
    check_contract(r, "error");
    CHECK(error_paths(r) == std::set<std::string>{"/diversity/k", "/criterion/terms/0/direction"});

    body = request_body(0, 1);
    body["criterion"]["terms"][0]["variable"] = "nope";
    body["criterion"]["terms"].push_back({{"model", "zz"}, {"variable", "y"}, {"direction", "match"}});
    body["run_id"] = "run-other";
    r = f.post(run + "/timelines", body.dump());
    CHECK(r.status == 422);
    CHECK(error_paths(r) == std::set<std::string>{"/criterion/terms/0/variable", "/criterion/terms/1/model",
                                                  "/criterion/terms/1/target", "/run_id"});

    body = request_body(0, 1);
    body["extra"] = true;
    CHECK(error_paths(f.post(run + "/timelines", body.dump())) == std::set<std::string>{"/extra"});

    r = f.get(run + "/graph", {{"page", "-1"}, {"page_size", "x"}, {"model", "zz"}});
    CHECK(r.status == 422);
    CHECK(error_paths(r) == std::set<std::string>{"/page", "/page_size", "/model"});
}

TEST_CASE("extraction matches the enumeration oracle and is cached") {
    Fixture f("svc-extract");
    const auto graph = strand::testing::two_branch_graph();
    const auto criterion = strand::testing::maximize("b", "y");
    std::string best;
    double best_score = -1e300;
    for (const auto& set : timeline::enumerate_timelines(graph)) {
        const auto t = timeline::make_timeline(graph, set, criterion);
        if (t.score > best_score) {
            best_score = t.score;
            best = t.id;
        }
    }

    const std::string run = "/api/runs/run-two-branch";
    const auto first = f.post(run + "/timelines", request_body(0.0, 1).dump());
    REQUIRE(first.status == 200);
    REQUIRE(first.body.at("timelines").size() == 1);
    CHECK(first.body.at("timelines")[0].at("timeline_id") == best);
    CHECK(first.body.at("timelines")[0].at("score").get<double>() == Catch::Approx(best_score));

    const auto again = f.post(run + "/timelines", request_body(0.0, 1).dump());
    CHECK(again.body == first.body);
    const auto id = first.body.at("request_id").get<std::string>();
    CHECK(fs::exists(f.root / "run-two-branch" / "extractions" / (id + ".json")));
    CHECK(f.get(run + "/extractions/" + id).body == first.body);

    const auto other = f.post(run + "/timelines", request_body(0.5, 1).dump());
    CHECK(other.body.at("request_id") != id);

    const auto short_k = f.post(run + "/timelines", request_body(0.0, 5).dump());
    CHECK(short_k.body.at("timelines").size() == 2);
    CHECK(short_k.body.contains("warning"));
}

TEST_CASE("an extraction past its time budget answers 202 and finishes later") {
    Fixture f("svc-budget", std::chrono::milliseconds(0));
    const std::string run = "/api/runs/run-two-branch";
    const auto r = f.post(run + "/timelines", request_body(0.0, 1).dump());
    REQUIRE((r.status == 202 || r.status == 200));
    check_contract(r, "extraction");
    const auto id = r.body.at("request_id").get<std::string>();
    Response done;
    for (int i = 0; i < 500; ++i) {
        done = f.get(run + "/extractions/" + id);
        if (done.status == 200) {
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    CHECK(done.status == 200);
    CHECK(done.body.at("status") == "complete");
}

TEST_CASE("provenance endpoint returns the reverse-reachable sub-graph") {
    std::mt19937_64 rng(303);
    const auto root = strand::testing::scratch_dir("svc-prov");
    ServiceConfig cfg;
    cfg.store_root = root;
    ApiService api(cfg);
    for (int i = 0; i < 20; ++i) {
        auto g = strand::testing::random_graph(rng, 30);
        const auto run_id = "run-rand-" + std::to_string(i);
        store::EnsembleGraph copy(run_id, g.flow(), g.horizon());
        for (std::size_t v = 0; v < g.size(); ++v) {
            std::vector<store::DataEdge> edges;
            for (auto e : g.in_edges(v)) {
                edges.push_back(g.edges()[e]);
            }
            copy.append(g.node(v), edges);
        }
        store::save_run(copy, root / run_id);
        for (std::size_t v = 0; v < copy.size(); ++v) {
            const auto r = api.provenance(run_id, copy.node(v).id);
            std::set<std::string> got;
            for (const auto& n : r.body.at("nodes")) {
                got.insert(n.at("id").get<std::string>());
            }
            std::set<std::string> expect;
            for (auto u : strand::testing::reverse_bfs(copy, v)) {
                expect.insert(copy.node(u).id);
            }
            REQUIRE(got == expect);
            for (const auto& e : r.body.at("edges")) {
                CHECK(got.count(e.at("from").get<std::string>()));
                CHECK(got.count(e.at("to").get<std::string>()));
            }
        }
    }
    Fixture f("svc-prov-source");
    const auto src = f.get("/api/runs/run-two-branch/instances/a:0:0/provenance");
    CHECK(src.body.at("nodes").size() == 1);
    CHECK(src.body.at("edges").empty());
}

TEST_CASE("graph pages partition the filtered node set") {
    const auto root = strand::testing::scratch_dir("svc-pages");
    store::EnsembleStore st(root);
    auto config = engine::load_run_config(strand::testing::data_path("demo_run.yaml").string(),
                                          load_flow(strand::testing::data_path("demo_flow.yaml").string()));
    const auto result = engine::run_ensemble(config, scenario::scenario_registry(), st, {1, false, {}});
    ServiceConfig cfg;
    cfg.store_root = root;
    ApiService api(cfg);
    const auto log = root / result.run_id / store::kRunLogName;
    const auto before_size = fs::file_size(log);
    const auto before_time = fs::last_write_time(log);

    for (std::size_t size : {1u, 7u, 50u, 500u}) {
        std::set<std::string> seen;
        std::size_t edges = 0;
        const auto first = api.graph_page(result.run_id, {{"page_size", std::to_string(size)}});
        const auto pages = first.body.at("total_pages").get<std::size_t>();
        for (std::size_t p = 0; p <= pages; ++p) {
            const auto r = api.graph_page(result.run_id, {{"page", std::to_string(p)}, {"page_size", std::to_string(size)}});
            check_contract(r, "graph_page");
            if (p == pages) {
                CHECK(r.body.at("nodes").empty());
            }
            for (const auto& n : r.body.at("nodes")) {
                REQUIRE(seen.insert(n.at("id").get<std::string>()).second);
            }
            edges += r.body.at("edges").size();
        }
        CHECK(seen.size() == result.graph.size());
        CHECK(edges == result.graph.edges().size());
    }

    const auto filtered = api.graph_page(result.run_id, {{"model", "mixing"}, {"step_min", "2"}, {"step_max", "3"}});
    std::size_t expect = 0;
    for (std::size_t v = 0; v < result.graph.size(); ++v) {
        const auto& n = result.graph.node(v);
        expect += n.model_id == "mixing" && n.step >= 2 && n.step <= 3;
    }
    CHECK(filtered.body.at("total_nodes") == expect);
    for (const auto& n : filtered.body.at("nodes")) {
        CHECK(n.at("model") == "mixing");
    }

    // Reads and extractions leave the run log alone.
    api.list_runs();
    const json body = {{"criterion", timeline::to_json(timeline::load_criterion(
                                         strand::testing::data_path("demo_criterion.yaml").string()))},
                       {"diversity", {{"k", 3}, {"lambda", 0.3}}}};
    const auto ex = api.extract(result.run_id, body);
    REQUIRE(ex.status == 200);
    const auto tid = ex.body.at("timelines")[0].at("timeline_id").get<std::string>();
    const auto detail = api.timeline_detail(result.run_id, tid, {{"max_points", "5"}});
    check_contract(detail, "timeline_detail");
    for (const auto& [model, vars] : detail.body.at("series").items()) {
        for (const auto& [var, s] : vars.items()) {
            CHECK(s.at("ticks").size() <= 5);
        }
    }
    api.provenance(result.run_id, result.graph.node(result.graph.size() - 1).id);
    CHECK(fs::file_size(log) == before_size);
    CHECK(fs::last_write_time(log) == before_time);
}

TEST_CASE("series payloads downsample by bucket means") {
    SeriesWindow s{"v", 0, 10, 1, 1, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}};
    const auto full = series_payload(s, 100);
    CHECK_FALSE(full.at("downsampled").get<bool>());
    CHECK(full.at("values").size() == 10);

    const auto down = series_payload(s, 3);
    CHECK(down.at("downsampled").get<bool>());
    // Buckets [0,3) [3,6) [6,10).
    CHECK(down.at("ticks") == json::array({0, 3, 6}));
    CHECK(down.at("values") == json::array({1.0, 4.0, 7.5}));

    SeriesWindow gappy{"v", 0, 8, 2, 1, {1, std::nan(""), std::nan(""), 5}};
    const auto g = series_payload(gappy, 2);
    CHECK(g.at("ticks") == json::array({0, 4}));
    CHECK(g.at("values") == json::array({1.0, 5.0}));
    CHECK(series_payload(gappy, 10).at("values")[1].is_null());

    SeriesWindow wide{"m", 0, 4, 1, 2, {1, 10, 3, 30, 5, 50, 7, 70}};
    const auto w = series_payload(wide, 2);
    CHECK(w.at("values") == json::array({2.0, 20.0, 6.0, 60.0}));
    CHECK(validate_payload("series", w).empty());
}

TEST_CASE("http round trip with permissive CORS") {
    Fixture f("svc-http");
    HttpServer server(*f.api);
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread t([&] { server.listen(); });
    httplib::Client client("127.0.0.1", port);
    auto res = client.Get("/api/runs/run-two-branch");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
    CHECK(json::parse(res->body).at("node_count") == 4);
    auto post = client.Post("/api/runs/run-two-branch/timelines", request_body(0, 1).dump(), "application/json");
    REQUIRE(post);
    CHECK(post->status == 200);
    CHECK(client.Get("/api/runs/nope")->status == 404);
    server.stop();
    t.join();
}

TEST_CASE("responses also validate under an independent JSON Schema implementation") {
    if (std::system("python3 -c 'import jsonschema' >/dev/null 2>&1") != 0) {
        SKIP("python jsonschema not available");
    }
    Fixture f("svc-pyschema");
    const std::string run = "/api/runs/run-two-branch";
    const auto ex = f.post(run + "/timelines", request_body(0.0, 2).dump());
    const auto tid = ex.body.at("timelines")[0].at("timeline_id").get<std::string>();
    const std::vector<Response> responses{f.get("/api/runs"),
                                          f.get(run),
                                          f.get(run + "/graph"),
                                          ex,
                                          f.get(run + "/timelines/" + tid),
                                          f.get(run + "/instances/b:0:0/provenance"),
                                          f.post(run + "/timelines/" + tid + "/export", ""),
                                          f.get("/api/runs/nope"),
                                          f.post(run + "/timelines", "{")};
    json cases = json::array();
    for (const auto& r : responses) {
        cases.push_back({{"schema", r.schema}, {"body", r.body}});
    }
    std::ofstream(f.root / "schemas.json") << api_schemas().dump();
    std::ofstream(f.root / "cases.json") << cases.dump();
    const auto script = f.root / "check.py";
    std::ofstream(script) << R"(import json, sys
from jsonschema import Draft202012Validator
d = sys.argv[1]
root = json.load(open(d + "/schemas.json"))
bad = 0
for c in json.load(open(d + "/cases.json")):
    v = Draft202012Validator({"$ref": "#/$defs/" + c["schema"], "$defs": root["$defs"]})
    for e in v.iter_errors(c["body"]):
        print(c["schema"], list(e.path), e.message)
        bad += 1
sys.exit(1 if bad else 0)
)";
    const auto cmd = "python3 " + script.string() + " " + f.root.string();
    CHECK(std::system(cmd.c_str()) == 0);
}
