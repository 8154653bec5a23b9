#include "strand/store/run_log.hpp"

#include "strand/core/errors.hpp"
#include "strand/core/flow_io.hpp"
#include "strand/core/hash.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace strand::store {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json window_json(const TickRange& w) { return json::array({w.lo, w.hi}); }

TickRange window_from(const json& j) { return {j.at(0).get<Tick>(), j.at(1).get<Tick>()}; }

json outputs_json(const std::vector<SeriesWindow>& outputs) {
    json out = json::array();
    for (const auto& o : outputs) {
        out.push_back(to_json(o));
    }
    return out;
}

std::size_t value_count(const std::vector<SeriesWindow>& outputs) {
    std::size_t n = 0;
    for (const auto& o : outputs) {
        n += o.values.size();
    }
    return n;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << text;
}

/// Node record; large output sets are written to a blob under `dir`.
json node_record(const SimulationInstance& n, const fs::path& dir) {
    json r = {{"record", "node"},
              {"id", n.id},
              {"model", n.model_id},
              {"step", n.step},
              {"params", n.params},
              {"window", window_json(n.window)},
              {"inputs_digest", n.inputs_digest},
              {"status", to_string(n.status)},
              {"state_parent", n.state_parent ? json(*n.state_parent) : json(nullptr)},
              {"error", n.error}};
    if (value_count(n.outputs) > kInlineValueLimit) {
        const auto blob = outputs_json(n.outputs).dump();
        const auto hash = sha256_hex(blob);
        fs::create_directories(dir / kBlobDir);
        const auto path = dir / kBlobDir / (hash + ".json");
        if (!fs::exists(path)) {
            write_file(path, blob);
        }
        r["outputs_blob"] = hash;
    } else {
        r["outputs"] = outputs_json(n.outputs);
    }
    return r;
}

json edge_record(const DataEdge& e) {
    return {{"record", "edge"},       {"from", e.from},         {"to", e.to},
            {"variable", e.variable}, {"input_var", e.input_var}, {"window", window_json(e.window)}};
}

json drop_record(const DropRecord& d) {
    return {{"record", "drop"}, {"model", d.model_id}, {"step", d.step}, {"parents", d.parents}, {"score", d.score}};
}

json run_record(const EnsembleGraph& g) {
    return {{"record", "run"}, {"run_id", g.run_id()}, {"flow", to_json(g.flow())}, {"horizon", g.horizon()},
            {"config", g.config()}};
}

json header_record() { return {{"record", "header"}, {"format", kRunLogFormat}, {"version", kRunLogVersion}}; }

json end_record(const EnsembleGraph& g) {
    return {{"record", "end"},
            {"status", to_string(g.status())},
            {"diagnostic", g.diagnostic()},
            {"nodes", g.size()},
            {"edges", g.edges().size()}};
}

SimulationInstance node_from(const json& r, const fs::path& dir) {
    SimulationInstance n;
    n.id = r.at("id").get<std::string>();
    n.model_id = r.at("model").get<std::string>();
    n.step = r.at("step").get<Tick>();
    n.params = r.at("params").get<ParameterVector>();
    n.window = window_from(r.at("window"));
    n.inputs_digest = r.at("inputs_digest").get<std::string>();
    n.status = instance_status_from_string(r.at("status").get<std::string>());
    if (!r.at("state_parent").is_null()) {
        n.state_parent = r.at("state_parent").get<std::string>();
    }
    n.error = r.at("error").get<std::string>();
    json outputs;
    if (r.contains("outputs_blob")) {
        const auto path = dir / kBlobDir / (r.at("outputs_blob").get<std::string>() + ".json");
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw Error("missing blob " + path.filename().string());
        }
        outputs = json::parse(in);
    } else {
        outputs = r.at("outputs");
    }
    for (const auto& o : outputs) {
        n.outputs.push_back(series_from_json(o));
    }
    return n;
}

}  // namespace

RunLogWriter::RunLogWriter(const fs::path& run_dir, const EnsembleGraph& meta, bool sync)
    : dir_(run_dir), sync_(sync) {
    fs::create_directories(dir_);
    file_ = std::fopen((dir_ / kRunLogName).c_str(), "wb");
    if (!file_) {
        throw Error("cannot create run log in '" + dir_.string() + "'");
    }
    write_line(header_record().dump());
    write_line(run_record(meta).dump());
}

RunLogWriter::~RunLogWriter() {
    if (file_) {
        std::fclose(file_);
    }
}

void RunLogWriter::write_line(const std::string& line) {
    std::fwrite(line.data(), 1, line.size(), file_);
    std::fputc('\n', file_);
    if (std::fflush(file_) != 0) {
        throw Error("run log write failed in '" + dir_.string() + "'");
    }
    if (sync_) {
        ::fsync(::fileno(file_));
    }
}

void RunLogWriter::append(const SimulationInstance& instance, const std::vector<DataEdge>& edges) {
    // Edges precede their node so a truncated log never exposes a node
    // without its full parent set.
    for (const auto& e : edges) {
        write_line(edge_record(e).dump());
    }
    write_line(node_record(instance, dir_).dump());
}

void RunLogWriter::drop(const DropRecord& drop) { write_line(drop_record(drop).dump()); }

void RunLogWriter::finish(const EnsembleGraph& graph) { write_line(end_record(graph).dump()); }

RunStore::RunStore(const fs::path& run_dir, std::string run_id, FlowGraph flow, Tick horizon, json config, bool sync)
    : dir_(run_dir), graph_(std::move(run_id), std::move(flow), horizon) {
    graph_.set_config(std::move(config));
    log_ = std::make_unique<RunLogWriter>(dir_, graph_, sync);
    write_file(dir_ / kRunningMarker, graph_.run_id() + "\n");
}

std::size_t RunStore::append_instance(SimulationInstance instance, std::vector<DataEdge> parent_edges) {
    graph_.check_append(instance, parent_edges);
    log_->append(instance, parent_edges);
    return graph_.append(std::move(instance), std::move(parent_edges));
}

void RunStore::record_drop(DropRecord drop) {
    log_->drop(drop);
    graph_.record_drop(std::move(drop));
}

void RunStore::finish(RunStatus status, std::string diagnostic) {
    graph_.set_status(status, std::move(diagnostic));
    log_->finish(graph_);
    log_.reset();
    fs::remove(dir_ / kRunningMarker);
}

void save_run(const EnsembleGraph& graph, const fs::path& run_dir) {
    fs::create_directories(run_dir);
    std::ostringstream os;
    os << header_record().dump() << '\n' << run_record(graph).dump() << '\n';
    // Drop positions relative to nodes are not tracked; they follow the nodes.
    for (std::size_t i = 0; i < graph.size(); ++i) {
        for (auto e : graph.in_edges(i)) {
            os << edge_record(graph.edges()[e]).dump() << '\n';
        }
        os << node_record(graph.node(i), run_dir).dump() << '\n';
    }
    for (const auto& d : graph.drops()) {
        os << drop_record(d).dump() << '\n';
    }
    if (graph.status() != RunStatus::running) {
        os << end_record(graph).dump() << '\n';
    }
    write_file(run_dir / kRunLogName, os.str());
}

EnsembleGraph load_run(const fs::path& run_dir) {
    std::ifstream in(run_dir / kRunLogName, std::ios::binary);
    if (!in) {
        throw UnknownRun("no run log in '" + run_dir.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();

    EnsembleGraph graph;
    bool have_meta = false;
    bool ended = false;
    std::vector<DataEdge> pending;
    std::string diagnostic;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        ++line_no;
        const auto nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            diagnostic = "truncated record at line " + std::to_string(line_no);
            break;
        }
        const auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        try {
            const auto r = json::parse(line);
            const auto kind = r.at("record").get<std::string>();
            if (line_no == 1) {
                if (kind != "header" || r.at("format") != kRunLogFormat || r.at("version") != kRunLogVersion) {
                    throw Error("unsupported run log header");
                }
                continue;
            }
            if (!have_meta) {
                if (kind != "run") {
                    throw Error("expected run record");
                }
                graph = EnsembleGraph(r.at("run_id").get<std::string>(), flow_from_json(r.at("flow")),
                                      r.at("horizon").get<Tick>());
                graph.set_config(r.at("config"));
                have_meta = true;
                continue;
            }
            if (ended) {
                throw Error("record after end record");
            }
            if (kind == "edge") {
                pending.push_back({r.at("from").get<std::string>(), r.at("to").get<std::string>(),
                                   r.at("variable").get<std::string>(), r.at("input_var").get<std::string>(),
                                   window_from(r.at("window"))});
            } else if (kind == "node") {
                auto node = node_from(r, run_dir);
                graph.append(std::move(node), std::move(pending));
                pending.clear();
            } else if (kind == "drop") {
                graph.record_drop({r.at("model").get<std::string>(), r.at("step").get<Tick>(),
                                   r.at("parents").get<std::vector<std::string>>(), r.at("score").get<double>()});
            } else if (kind == "end") {
                graph.set_status(run_status_from_string(r.at("status").get<std::string>()),
                                 r.at("diagnostic").get<std::string>());
                ended = true;
            } else {
                throw Error("unknown record type '" + kind + "'");
            }
        } catch (const std::exception& e) {
            diagnostic = "corrupt record at line " + std::to_string(line_no) + ": " + e.what();
            break;
        }
    }
    if (!have_meta) {
        throw UnknownRun("run log in '" + run_dir.string() + "' has no run record" +
                         (diagnostic.empty() ? "" : " (" + diagnostic + ")"));
    }
    if (!diagnostic.empty()) {
        graph.set_status(RunStatus::incomplete, diagnostic);
    } else if (!ended && fs::exists(run_dir / kRunningMarker)) {
        graph.set_status(RunStatus::running);
    } else if (!ended) {
        graph.set_status(RunStatus::incomplete, "run log has no end record");
    }
    return graph;
}

std::vector<std::string> list_runs(const fs::path& root) {
    std::vector<std::string> out;
    if (!fs::is_directory(root)) {
        return out;
    }
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / kRunLogName)) {
            out.push_back(entry.path().filename().string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace strand::store
