#pragma once

#include "strand/store/ensemble_store.hpp"
#include "strand/timeline/extract.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace strand::service {

struct ServiceConfig {
    std::filesystem::path store_root = "runs";
    /// Extraction requests still running after this answer 202.
    std::chrono::milliseconds time_budget{10000};
    std::size_t default_max_points = 2000;
    std::size_t default_page_size = 500;
    std::size_t max_page_size = 10000;
    std::optional<std::filesystem::path> static_dir;
};

struct Request {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct Response {
    int status = 200;
    nlohmann::json body;
    /// $defs entry the body conforms to.
    std::string schema;
};

/// Transport-independent handler for the /api endpoints. Reads never mutate
/// a run; the only writes are extraction caches, timeline records and
/// export files under the run directory.
class ApiService {
public:
    explicit ApiService(ServiceConfig config);
    ~ApiService();
    ApiService(const ApiService&) = delete;
    ApiService& operator=(const ApiService&) = delete;

    Response handle(const Request& request);

    Response list_runs();
    Response graph_page(const std::string& run_id, const std::map<std::string, std::string>& query);
    Response extract(const std::string& run_id, const nlohmann::json& body);
    Response extraction(const std::string& run_id, const std::string& request_id);
    Response timeline_detail(const std::string& run_id, const std::string& timeline_id,
                             const std::map<std::string, std::string>& query);
    Response provenance(const std::string& run_id, const std::string& instance_id);
    Response export_timeline(const std::string& run_id, const std::string& timeline_id);

    const ServiceConfig& config() const noexcept { return config_; }
    const store::EnsembleStore& store() const noexcept { return store_; }

private:
    std::shared_ptr<const store::EnsembleGraph> snapshot(const std::string& run_id);
    nlohmann::json compute_extraction(const std::string& run_id, const std::string& request_id,
                                      const timeline::PreferenceCriterion& criterion,
                                      const timeline::DiversityConfig& diversity);

    struct Snapshot {
        std::uintmax_t size = 0;
        std::filesystem::file_time_type mtime;
        std::shared_ptr<const store::EnsembleGraph> graph;
    };

    ServiceConfig config_;
    store::EnsembleStore store_;
    std::mutex mutex_;
    std::map<std::string, Snapshot> snapshots_;
    std::map<std::string, std::shared_future<nlohmann::json>> inflight_;
};

/// Series payload: values flattened (NaN as null), one tick per sample, and
/// bucket means when the sample count exceeds `max_points`.
nlohmann::json series_payload(const SeriesWindow& series, std::size_t max_points);

/// Timeline records live under `<run dir>/timelines`; they let a later
/// request re-derive a timeline from its id.
void save_timeline_record(const std::filesystem::path& run_dir, const timeline::Timeline& timeline,
                          const timeline::PreferenceCriterion& criterion);
std::optional<nlohmann::json> load_timeline_record(const std::filesystem::path& run_dir, const std::string& timeline_id);
/// Recomputes the timeline from its record and writes the export file.
std::filesystem::path export_from_record(const store::EnsembleGraph& graph, const nlohmann::json& record,
                                         const std::filesystem::path& dir);

nlohmann::json node_json(const store::SimulationInstance& node);
nlohmann::json edge_json(const store::DataEdge& edge);

/// Blocking HTTP front end for an ApiService; also serves static files for
/// the explorer when configured.
class HttpServer {
public:
    explicit HttpServer(ApiService& api);
    ~HttpServer();

    /// Binds; port 0 picks a free port. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    /// Serves until stop().
    bool listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace strand::service
