#include "strand/service/api.hpp"

#include "strand/core/errors.hpp"
#include "strand/core/flow_io.hpp"
#include "strand/core/hash.hpp"
#include "strand/service/schema.hpp"
#include "strand/timeline/export.hpp"

#include <httplib.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <regex>
#include <set>

namespace strand::service {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kExtractionDir = "extractions";
constexpr const char* kTimelineDir = "timelines";
constexpr const char* kExportDir = "exports";

Response error(int status, const std::string& message, const std::vector<SchemaError>& fields = {}) {
    json body = {{"error", message}};
    if (!fields.empty()) {
        json list = json::array();
        for (const auto& f : fields) {
            list.push_back({{"path", f.path}, {"message", f.message}});
        }
        body["fields"] = std::move(list);
    }
    return {status, std::move(body), "error"};
}

Response ok(json body, std::string schema, int status = 200) { return {status, std::move(body), std::move(schema)}; }

std::optional<std::int64_t> parse_int(const std::string& s) {
    std::int64_t v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || s.empty()) {
        return std::nullopt;
    }
    return v;
}

void write_atomic(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write '" + tmp.string() + "'");
        }
        out << text;
    }
    fs::rename(tmp, path);
}

std::optional<json> read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    try {
        return json::parse(in);
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

/// Timeline and request ids are hex digests with a short prefix.
bool safe_id(const std::string& id) {
    static const std::regex re("[A-Za-z0-9_.:-]{1,128}");
    return std::regex_match(id, re) && id != "." && id != "..";
}

json summary_json(const store::EnsembleGraph& g, const std::string& created_at) {
    return {{"run_id", g.run_id()},
            {"flow_name", g.flow().name},
            {"horizon", g.horizon()},
            {"node_count", g.size()},
            {"edge_count", g.edges().size()},
            {"status", store::to_string(g.status())},
            {"created_at", created_at},
            {"diagnostic", g.diagnostic()}};
}

}  // namespace

void save_timeline_record(const fs::path& run_dir, const timeline::Timeline& t,
                          const timeline::PreferenceCriterion& criterion) {
    const json record = {{"timeline_id", t.id}, {"run_id", t.run_id},     {"node_ids", t.node_ids},
                         {"score", t.score},    {"coverage", t.coverage}, {"criterion", to_json(criterion)}};
    write_atomic(run_dir / kTimelineDir / (t.id + ".json"), record.dump());
}

std::optional<json> load_timeline_record(const fs::path& run_dir, const std::string& timeline_id) {
    if (!safe_id(timeline_id)) {
        return std::nullopt;
    }
    return read_json(run_dir / kTimelineDir / (timeline_id + ".json"));
}

fs::path export_from_record(const store::EnsembleGraph& graph, const json& record, const fs::path& dir) {
    const auto criterion = timeline::criterion_from_json(record.at("criterion"));
    const auto ids = record.at("node_ids").get<std::vector<std::string>>();
    const auto t = timeline::make_timeline(graph, timeline::resolve(graph, ids), criterion);
    return timeline::write_timeline_export(dir, timeline::export_timeline(graph, t, criterion));
}

json node_json(const store::SimulationInstance& n) {
    return {{"id", n.id},
            {"model", n.model_id},
            {"step", n.step},
            {"window", json::array({n.window.lo, n.window.hi})},
            {"params", n.params},
            {"status", store::to_string(n.status)},
            {"inputs_digest", n.inputs_digest},
            {"state_parent", n.state_parent ? json(*n.state_parent) : json(nullptr)},
            {"error", n.error}};
}

json edge_json(const store::DataEdge& e) {
    return {{"from", e.from},
            {"to", e.to},
            {"variable", e.variable},
            {"input_var", e.input_var},
            {"window", json::array({e.window.lo, e.window.hi})}};
}

json series_payload(const SeriesWindow& s, std::size_t max_points) {
    const auto n = s.t_end > s.t_start ? static_cast<std::size_t>(s.sample_count()) : std::size_t{0};
    const auto width = static_cast<std::size_t>(s.width);
    json ticks = json::array();
    json values = json::array();
    auto put = [&](double v) { values.push_back(std::isnan(v) ? json(nullptr) : json(v)); };
    const bool down = max_points > 0 && n > max_points;
    if (!down) {
        for (std::size_t k = 0; k < n; ++k) {
            ticks.push_back(s.t_start + static_cast<Tick>(k) * s.resolution);
            for (std::size_t c = 0; c < width; ++c) {
                put(s.values[k * width + c]);
            }
        }
    } else {
        for (std::size_t b = 0; b < max_points; ++b) {
            const auto lo = b * n / max_points;
            const auto hi = (b + 1) * n / max_points;
            ticks.push_back(s.t_start + static_cast<Tick>(lo) * s.resolution);
            for (std::size_t c = 0; c < width; ++c) {
                double sum = 0.0;
                std::size_t count = 0;
                for (auto k = lo; k < hi; ++k) {
                    const double v = s.values[k * width + c];
                    if (!std::isnan(v)) {
                        sum += v;
                        ++count;
                    }
                }
                put(count ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN());
            }
        }
    }
    return {{"variable", s.variable},   {"t_start", s.t_start}, {"t_end", s.t_end},
            {"resolution", s.resolution}, {"width", s.width},     {"ticks", std::move(ticks)},
            {"values", std::move(values)}, {"downsampled", down}};
}

ApiService::ApiService(ServiceConfig config) : config_(std::move(config)), store_(config_.store_root) {}

ApiService::~ApiService() {
    std::map<std::string, std::shared_future<json>> pending;
    {
        std::lock_guard lock(mutex_);
        pending.swap(inflight_);
    }
    for (auto& [id, f] : pending) {
        f.wait();
    }
}

std::shared_ptr<const store::EnsembleGraph> ApiService::snapshot(const std::string& run_id) {
    if (!safe_id(run_id) || !store_.exists(run_id)) {
        throw UnknownRun("unknown run '" + run_id + "'");
    }
    const auto log = store_.run_dir(run_id) / store::kRunLogName;
    std::error_code ec;
    const auto size = fs::file_size(log, ec);
    const auto mtime = fs::last_write_time(log, ec);
    std::lock_guard lock(mutex_);
    auto it = snapshots_.find(run_id);
    if (it != snapshots_.end() && it->second.size == size && it->second.mtime == mtime) {
        return it->second.graph;
    }
    auto graph = std::make_shared<const store::EnsembleGraph>(store_.load(run_id));
    snapshots_[run_id] = {size, mtime, graph};
    return graph;
}

Response ApiService::list_runs() {
    json runs = json::array();
    for (const auto& id : store_.list()) {
        try {
            runs.push_back(summary_json(*snapshot(id), store_.created_at(id)));
        } catch (const UnknownRun&) {
            // A directory without a readable run record is not a run.
        }
    }
    return ok({{"runs", std::move(runs)}}, "run_list");
}

Response ApiService::graph_page(const std::string& run_id, const std::map<std::string, std::string>& query) {
    const auto graph = snapshot(run_id);
    std::vector<SchemaError> fields;
    auto int_param = [&](const std::string& key, std::int64_t fallback, std::int64_t min) {
        auto it = query.find(key);
        if (it == query.end()) {
            return fallback;
        }
        const auto v = parse_int(it->second);
        if (!v || *v < min) {
            fields.push_back({"/" + key, "must be an integer >= " + std::to_string(min)});
            return fallback;
        }
        return *v;
    };
    const auto page = int_param("page", 0, 0);
    const auto page_size = int_param("page_size", static_cast<std::int64_t>(config_.default_page_size), 1);
    const auto step_min = int_param("step_min", 0, 0);
    const auto step_max = int_param("step_max", std::numeric_limits<std::int64_t>::max(), 0);
    if (page_size > static_cast<std::int64_t>(config_.max_page_size)) {
        fields.push_back({"/page_size", "must be <= " + std::to_string(config_.max_page_size)});
    }
    std::optional<std::string> model;
    if (auto it = query.find("model"); it != query.end()) {
        model = it->second;
        if (!graph->flow().find_model(*model)) {
            fields.push_back({"/model", "unknown model '" + *model + "'"});
        }
    }
    if (!fields.empty()) {
        return error(422, "invalid graph query", fields);
    }

    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < graph->size(); ++i) {
        const auto& n = graph->node(i);
        if ((!model || n.model_id == *model) && n.step >= step_min && n.step <= step_max) {
            selected.push_back(i);
        }
    }
    const auto size = static_cast<std::size_t>(page_size);
    const auto total_pages = (selected.size() + size - 1) / size;
    json nodes = json::array();
    json edges = json::array();
    const auto first = static_cast<std::size_t>(page) * size;
    for (auto k = first; k < std::min(selected.size(), first + size); ++k) {
        const auto v = selected[k];
        nodes.push_back(node_json(graph->node(v)));
        for (auto e : graph->in_edges(v)) {
            edges.push_back(edge_json(graph->edges()[e]));
        }
    }
    return ok({{"run_id", run_id},
               {"page", page},
               {"page_size", page_size},
               {"total_nodes", selected.size()},
               {"total_pages", total_pages},
               {"nodes", std::move(nodes)},
               {"edges", std::move(edges)}},
              "graph_page");
}

json ApiService::compute_extraction(const std::string& run_id, const std::string& request_id,
                                    const timeline::PreferenceCriterion& criterion,
                                    const timeline::DiversityConfig& diversity) {
    const auto graph = snapshot(run_id);
    const auto found = timeline::extract_top_k(*graph, criterion, diversity);
    const auto dir = store_.run_dir(run_id);
    json list = json::array();
    for (const auto& t : found) {
        save_timeline_record(dir, t, criterion);
        list.push_back({{"timeline_id", t.id}, {"score", t.score}, {"coverage", t.coverage}, {"node_count", t.nodes.size()}});
    }
    json body = {{"request_id", request_id}, {"run_id", run_id}, {"status", "complete"}, {"timelines", list}};
    if (found.size() < diversity.k) {
        body["warning"] = "only " + std::to_string(found.size()) + " timeline(s) available for k=" +
                          std::to_string(diversity.k);
    }
    write_atomic(dir / kExtractionDir / (request_id + ".json"), body.dump());
    return body;
}

Response ApiService::extract(const std::string& run_id, const json& body) {
    const auto graph = snapshot(run_id);
    if (auto errors = validate_payload("timeline_request", body); !errors.empty()) {
        return error(422, "invalid timeline request", errors);
    }
    std::vector<SchemaError> fields;
    if (body.contains("run_id") && body.at("run_id") != run_id) {
        fields.push_back({"/run_id", "does not match the run in the path"});
    }
    timeline::PreferenceCriterion criterion;
    const auto& terms = body.at("criterion").at("terms");
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto& t = terms[i];
        const auto path = "/criterion/terms/" + std::to_string(i);
        const bool match = t.at("direction") == "match";
        if (match && (!t.contains("target") || t.at("target").empty())) {
            fields.push_back({path + "/target", "is required for match"});
        }
        if (!match && t.contains("target")) {
            fields.push_back({path + "/target", "is only valid for match"});
        }
        const auto* m = graph->flow().find_model(t.at("model").get<std::string>());
        if (!m) {
            fields.push_back({path + "/model", "unknown model"});
        } else if (!m->find_output(t.at("variable").get<std::string>())) {
            fields.push_back({path + "/variable", "model has no such output"});
        }
    }
    if (!fields.empty()) {
        return error(422, "invalid timeline request", fields);
    }
    try {
        criterion = timeline::criterion_from_json(body.at("criterion"));
    } catch (const Error& e) {
        return error(422, e.what(), {{"/criterion", e.what()}});
    }
    timeline::DiversityConfig diversity;
    const auto& d = body.at("diversity");
    diversity.k = d.at("k").get<std::size_t>();
    diversity.lambda = d.value("lambda", 0.0);
    diversity.beam_width = d.value("beam_width", timeline::kDefaultBeamWidth);

    const json key = {{"run_id", run_id},
                      {"nodes", graph->size()},
                      {"status", store::to_string(graph->status())},
                      {"criterion", to_json(criterion)},
                      {"diversity", {{"k", diversity.k}, {"lambda", diversity.lambda}, {"beam_width", diversity.beam_width}}}};
    const auto request_id = "ex-" + sha256_hex(key.dump()).substr(0, 16);
    if (auto cached = read_json(store_.run_dir(run_id) / kExtractionDir / (request_id + ".json"))) {
        return ok(std::move(*cached), "extraction");
    }

    std::shared_future<json> job;
    {
        std::lock_guard lock(mutex_);
        auto it = inflight_.find(request_id);
        if (it == inflight_.end()) {
            job = std::async(std::launch::async, [this, run_id, request_id, criterion, diversity] {
                      return compute_extraction(run_id, request_id, criterion, diversity);
                  }).share();
            inflight_.emplace(request_id, job);
        } else {
            job = it->second;
        }
    }
    if (job.wait_for(config_.time_budget) != std::future_status::ready) {
        return ok({{"request_id", request_id}, {"run_id", run_id}, {"status", "computing"}}, "extraction", 202);
    }
    {
        std::lock_guard lock(mutex_);
        inflight_.erase(request_id);
    }
    return ok(job.get(), "extraction");
}

Response ApiService::extraction(const std::string& run_id, const std::string& request_id) {
    snapshot(run_id);
    if (safe_id(request_id)) {
        if (auto cached = read_json(store_.run_dir(run_id) / kExtractionDir / (request_id + ".json"))) {
            return ok(std::move(*cached), "extraction");
        }
        std::lock_guard lock(mutex_);
        if (inflight_.count(request_id)) {
            return ok({{"request_id", request_id}, {"run_id", run_id}, {"status", "computing"}}, "extraction", 202);
        }
    }
    return error(404, "unknown extraction request '" + request_id + "'");
}

Response ApiService::timeline_detail(const std::string& run_id, const std::string& timeline_id,
                                     const std::map<std::string, std::string>& query) {
    const auto graph = snapshot(run_id);
    const auto record = load_timeline_record(store_.run_dir(run_id), timeline_id);
    if (!record) {
        return error(404, "unknown timeline '" + timeline_id + "'");
    }
    auto max_points = config_.default_max_points;
    if (auto it = query.find("max_points"); it != query.end()) {
        const auto v = parse_int(it->second);
        if (!v || *v < 1) {
            return error(422, "invalid timeline query", {{"/max_points", "must be an integer >= 1"}});
        }
        max_points = static_cast<std::size_t>(*v);
    }
    const auto ids = record->at("node_ids").get<std::vector<std::string>>();
    const auto nodes = timeline::resolve(*graph, ids);
    std::set<std::string> models;
    for (auto v : nodes) {
        models.insert(graph->node(v).model_id);
    }
    json series = json::object();
    for (const auto& m : models) {
        json vars = json::object();
        for (const auto& out : graph->flow().model(m).outputs) {
            vars[out.name] = series_payload(timeline::timeline_series(*graph, nodes, m, out.name), max_points);
        }
        series[m] = std::move(vars);
    }
    return ok({{"timeline_id", timeline_id},
               {"run_id", run_id},
               {"node_ids", ids},
               {"score", record->at("score")},
               {"coverage", record->at("coverage")},
               {"series", std::move(series)}},
              "timeline_detail");
}

Response ApiService::provenance(const std::string& run_id, const std::string& instance_id) {
    const auto graph = snapshot(run_id);
    const auto p = store::provenance(*graph, instance_id);
    json nodes = json::array();
    for (auto v : p.nodes) {
        nodes.push_back(node_json(graph->node(v)));
    }
    json edges = json::array();
    for (auto e : p.edges) {
        edges.push_back(edge_json(graph->edges()[e]));
    }
    return ok({{"run_id", run_id}, {"instance_id", instance_id}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}},
              "provenance");
}

Response ApiService::export_timeline(const std::string& run_id, const std::string& timeline_id) {
    const auto graph = snapshot(run_id);
    const auto record = load_timeline_record(store_.run_dir(run_id), timeline_id);
    if (!record) {
        return error(404, "unknown timeline '" + timeline_id + "'");
    }
    const auto path = export_from_record(*graph, *record, store_.run_dir(run_id) / kExportDir);
    return ok({{"timeline_id", timeline_id}, {"run_id", run_id}, {"path", path.string()}}, "export_result");
}

Response ApiService::handle(const Request& request) {
    static const std::regex runs_re("^/api/runs/?$");
    static const std::regex run_re("^/api/runs/([^/]+)$");
    static const std::regex graph_re("^/api/runs/([^/]+)/graph$");
    static const std::regex extract_re("^/api/runs/([^/]+)/timelines$");
    static const std::regex extraction_re("^/api/runs/([^/]+)/extractions/([^/]+)$");
    static const std::regex timeline_re("^/api/runs/([^/]+)/timelines/([^/]+)$");
    static const std::regex export_re("^/api/runs/([^/]+)/timelines/([^/]+)/export$");
    static const std::regex provenance_re("^/api/runs/([^/]+)/instances/([^/]+)/provenance$");
    static const std::regex schemas_re("^/api/schemas(?:/([^/]+))?$");

    const bool get = request.method == "GET";
    const bool post = request.method == "POST";
    std::smatch m;
    try {
        if (get && std::regex_match(request.path, m, runs_re)) {
            return list_runs();
        }
        if (get && std::regex_match(request.path, m, run_re)) {
            const auto graph = snapshot(m[1]);
            return ok(summary_json(*graph, store_.created_at(m[1])), "run_summary");
        }
        if (get && std::regex_match(request.path, m, graph_re)) {
            return graph_page(m[1], request.query);
        }
        if (post && std::regex_match(request.path, m, extract_re)) {
            json body;
            try {
                body = json::parse(request.body);
            } catch (const json::exception& e) {
                return error(400, std::string("request body is not valid JSON: ") + e.what());
            }
            return extract(m[1], body);
        }
        if (get && std::regex_match(request.path, m, extraction_re)) {
            return extraction(m[1], m[2]);
        }
        if (get && std::regex_match(request.path, m, timeline_re)) {
            return timeline_detail(m[1], m[2], request.query);
        }
        if (post && std::regex_match(request.path, m, export_re)) {
            return export_timeline(m[1], m[2]);
        }
        if (get && std::regex_match(request.path, m, provenance_re)) {
            return provenance(m[1], m[2]);
        }
        if (get && std::regex_match(request.path, m, schemas_re)) {
            if (!m[1].matched) {
                return ok(api_schemas(), "");
            }
            const auto& defs = api_schemas().at("$defs");
            if (!defs.contains(m[1].str())) {
                return error(404, "unknown schema '" + m[1].str() + "'");
            }
            return ok(defs.at(m[1].str()), "");
        }
        return error(404, "no route for " + request.method + " " + request.path);
    } catch (const UnknownRun& e) {
        return error(404, e.what());
    } catch (const UnknownInstance& e) {
        return error(404, e.what());
    } catch (const UnknownVariable& e) {
        return error(422, e.what());
    } catch (const std::exception& e) {
        return error(500, e.what());
    }
}

struct HttpServer::Impl {
    explicit Impl(ApiService& a) : api(a) {}
    ApiService& api;
    httplib::Server server;
};

HttpServer::HttpServer(ApiService& api) : impl_(std::make_unique<Impl>(api)) {
    auto& svr = impl_->server;
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
        Request r{req.method, req.path, {}, req.body};
        for (const auto& [k, v] : req.params) {
            r.query[k] = v;
        }
        const auto out = impl_->api.handle(r);
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
    };
    svr.Get(R"(/api/.*)", route);
    svr.Post(R"(/api/.*)", route);
    svr.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
    svr.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
    });
    if (const auto& dir = api.config().static_dir) {
        svr.set_mount_point("/", dir->string());
    }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        return impl_->server.bind_to_any_port(host);
    }
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) {
        impl_->server.stop();
    }
}

}  // namespace strand::service
