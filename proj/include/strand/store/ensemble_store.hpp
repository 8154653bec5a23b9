#pragma once

#include "strand/store/run_log.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace strand::store {

/// Sidecar holding the creation timestamp (ISO 8601, UTC).
inline constexpr const char* kCreatedName = "CREATED";

/// A store root: one directory per run id, each holding a run log and blobs.
class EnsembleStore {
public:
    explicit EnsembleStore(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }
    std::filesystem::path run_dir(const std::string& run_id) const;
    bool exists(const std::string& run_id) const;
    std::vector<std::string> list() const;

    /// Starts a fresh run directory, replacing any previous contents.
    std::unique_ptr<RunStore> create(const std::string& run_id, FlowGraph flow, Tick horizon, nlohmann::json config,
                                     bool sync = true) const;
    /// Creation timestamp, falling back to the run log's mtime.
    std::string created_at(const std::string& run_id) const;
    /// Throws UnknownRun.
    EnsembleGraph load(const std::string& run_id) const;

private:
    std::filesystem::path root_;
};

}  // namespace strand::store
