#pragma once

#include "strand/store/graph.hpp"

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace strand::store {

inline constexpr int kRunLogVersion = 1;
inline constexpr const char* kRunLogFormat = "strand-run-log";
inline constexpr const char* kRunLogName = "run.log";
inline constexpr const char* kBlobDir = "blobs";
/// Present while a writer owns the run directory.
inline constexpr const char* kRunningMarker = "RUNNING";
/// Output sets with more values than this go to a sidecar blob.
inline constexpr std::size_t kInlineValueLimit = 4096;

/// Writes run log records to `<run_dir>/run.log`. Every record is flushed
/// (and, with `sync`, fsync'ed) before the call returns.
class RunLogWriter {
public:
    RunLogWriter(const std::filesystem::path& run_dir, const EnsembleGraph& meta, bool sync);
    ~RunLogWriter();
    RunLogWriter(const RunLogWriter&) = delete;
    RunLogWriter& operator=(const RunLogWriter&) = delete;

    void append(const SimulationInstance& instance, const std::vector<DataEdge>& edges);
    void drop(const DropRecord& drop);
    void finish(const EnsembleGraph& graph);

private:
    void write_line(const std::string& line);

    std::filesystem::path dir_;
    std::FILE* file_ = nullptr;
    bool sync_;
};

/// Ensemble store handle for one run: an in-memory graph backed by a
/// write-ahead run log. Single writer.
class RunStore {
public:
    RunStore(const std::filesystem::path& run_dir, std::string run_id, FlowGraph flow, Tick horizon,
             nlohmann::json config, bool sync = true);

    /// Validates, logs, then inserts. Throws DuplicateId / UnknownParent
    /// without writing anything.
    std::size_t append_instance(SimulationInstance instance, std::vector<DataEdge> parent_edges);
    void record_drop(DropRecord drop);
    void finish(RunStatus status, std::string diagnostic = {});

    const EnsembleGraph& graph() const noexcept { return graph_; }
    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
    EnsembleGraph graph_;
    std::unique_ptr<RunLogWriter> log_;
};

/// Writes a complete log (plus blobs) for `graph` into `run_dir`.
void save_run(const EnsembleGraph& graph, const std::filesystem::path& run_dir);

/// Reads `<run_dir>/run.log`. A truncated or invalid record ends the load:
/// the valid prefix is returned with status incomplete and a diagnostic.
EnsembleGraph load_run(const std::filesystem::path& run_dir);

/// Run ids (directory names containing a run log) under `root`, sorted.
std::vector<std::string> list_runs(const std::filesystem::path& root);

}  // namespace strand::store
