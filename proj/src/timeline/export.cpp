#include "strand/timeline/export.hpp"

#include "strand/core/errors.hpp"
#include "strand/core/flow_io.hpp"

#include <fstream>
#include <set>

namespace strand::timeline {

using nlohmann::json;

json export_timeline(const store::EnsembleGraph& graph, const Timeline& timeline, const PreferenceCriterion& criterion) {
    std::set<std::string> models;
    for (auto v : timeline.nodes) {
        models.insert(graph.node(v).model_id);
    }
    json series = json::object();
    for (const auto& m : models) {
        json vars = json::object();
        for (const auto& out : graph.flow().model(m).outputs) {
            vars[out.name] = to_json(timeline_series(graph, timeline.nodes, m, out.name));
        }
        series[m] = std::move(vars);
    }
    return {{"format", kTimelineFormat},
            {"version", kTimelineVersion},
            {"run_id", timeline.run_id},
            {"timeline_id", timeline.id},
            {"criterion", to_json(criterion)},
            {"node_ids", timeline.node_ids},
            {"score", timeline.score},
            {"coverage", timeline.coverage},
            {"series", std::move(series)}};
}

std::filesystem::path write_timeline_export(const std::filesystem::path& dir, const json& record) {
    std::filesystem::create_directories(dir);
    const auto path = dir / (record.at("timeline_id").get<std::string>() + ".json");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << record.dump(2) << '\n';
    return path;
}

}  // namespace strand::timeline
