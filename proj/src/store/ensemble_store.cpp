#include "strand/store/ensemble_store.hpp"

#include "strand/core/errors.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

namespace strand::store {

namespace fs = std::filesystem;

namespace {

std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

EnsembleStore::EnsembleStore(fs::path root) : root_(std::move(root)) {}

fs::path EnsembleStore::run_dir(const std::string& run_id) const {
    if (run_id.empty() || run_id.find_first_of("/\\") != std::string::npos || run_id == "." || run_id == "..") {
        throw UnknownRun("invalid run id '" + run_id + "'");
    }
    return root_ / run_id;
}

bool EnsembleStore::exists(const std::string& run_id) const {
    return fs::exists(run_dir(run_id) / kRunLogName);
}

std::vector<std::string> EnsembleStore::list() const { return list_runs(root_); }

std::unique_ptr<RunStore> EnsembleStore::create(const std::string& run_id, FlowGraph flow, Tick horizon,
                                                nlohmann::json config, bool sync) const {
    const auto dir = run_dir(run_id);
    fs::remove_all(dir);
    auto run = std::make_unique<RunStore>(dir, run_id, std::move(flow), horizon, std::move(config), sync);
    // Kept outside the run log so logs of identical runs stay byte-identical.
    std::ofstream(dir / kCreatedName) << utc_timestamp(std::chrono::system_clock::now()) << '\n';
    return run;
}

EnsembleGraph EnsembleStore::load(const std::string& run_id) const {
    if (!exists(run_id)) {
        throw UnknownRun("unknown run '" + run_id + "'");
    }
    return load_run(run_dir(run_id));
}

}  // namespace strand::store

namespace strand::store {

std::string EnsembleStore::created_at(const std::string& run_id) const {
    const auto dir = run_dir(run_id);
    std::ifstream in(dir / kCreatedName);
    std::string line;
    if (in && std::getline(in, line) && !line.empty()) {
        return line;
    }
    std::error_code ec;
    const auto when = fs::last_write_time(dir / kRunLogName, ec);
    if (ec) {
        return "";
    }
    // gcc 11 lacks clock_cast; shift by the offset between the two clocks.
    const auto sys = std::chrono::time_point_cast<std::chrono::system_clock::duration>(
        when - fs::file_time_type::clock::now() + std::chrono::system_clock::now());
    return utc_timestamp(sys);
}

}  // namespace strand::store
