#pragma once

#include "strand/timeline/extract.hpp"

#include <json.hpp>

#include <filesystem>

namespace strand::timeline {

inline constexpr const char* kTimelineFormat = "strand-timeline";
inline constexpr int kTimelineVersion = 1;

/// Export record: run id, criterion, members, score, coverage and the
/// stitched series of every output of every model in the timeline.
nlohmann::json export_timeline(const store::EnsembleGraph& graph, const Timeline& timeline,
                               const PreferenceCriterion& criterion);

/// Writes `<dir>/<timeline id>.json` and returns the path.
std::filesystem::path write_timeline_export(const std::filesystem::path& dir, const nlohmann::json& record);

}  // namespace strand::timeline
