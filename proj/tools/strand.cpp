#include "strand/core/errors.hpp"
#include "strand/core/flow_io.hpp"
#include "strand/core/validate.hpp"
#include "strand/engine/run.hpp"
#include "strand/scenario/models.hpp"
#include "strand/service/api.hpp"
#include "strand/timeline/export.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>

namespace {

using namespace strand;

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

/// Flow plus the config that refers to it; one file means the config names
/// its flow.
engine::RunConfig load_inputs(const std::vector<std::string>& files) {
    std::string flow_path;
    std::string config_path;
    if (files.size() == 2) {
        flow_path = files[0];
        config_path = files[1];
    } else {
        config_path = files[0];
        auto declared = engine::run_config_flow_path(config_path);
        if (!declared) {
            throw Error(config_path + ": no flow given and the config declares none");
        }
        flow_path = *declared;
    }
    FlowGraph flow;
    try {
        flow = load_flow(flow_path);
    } catch (const ParseError& e) {
        throw ParseError(flow_path + ": " + e.what());
    }
    try {
        return engine::load_run_config(config_path, std::move(flow));
    } catch (const ParseError& e) {
        throw ParseError(config_path + ": " + e.what());
    }
}

int cmd_validate(const std::vector<std::string>& files) {
    FlowGraph flow;
    try {
        flow = load_flow(files[0]);
    } catch (const ParseError& e) {
        std::cerr << files[0] << ": " << e.what() << "\n";
        return 1;
    }
    const auto names = scenario::scenario_registry().names();
    const auto report = validate_flow(flow, &names);
    if (!report.empty()) {
        std::cerr << format_report(report);
        return 1;
    }
    if (files.size() > 1) {
        try {
            engine::load_run_config(files[1], flow);
        } catch (const Error& e) {
            std::cerr << files[1] << ": " << e.what() << "\n";
            return 1;
        }
    }
    std::cout << "ok: " << flow.name << " (" << flow.nodes.size() << " models, " << flow.edges.size()
              << " edges)\n";
    return 0;
}

int cmd_run(const std::vector<std::string>& files, const std::string& store_root, std::size_t workers) {
    const auto config = load_inputs(files);
    store::EnsembleStore store(store_root);
    engine::RunOptions options;
    options.workers = workers;
    options.progress = [](const std::string& line) { std::cerr << line << "\n"; };
    const auto result = engine::run_ensemble(config, scenario::scenario_registry(), store, options);
    if (!result.diagnostic.empty()) {
        std::cerr << result.diagnostic << "\n";
    }
    std::cerr << "nodes: " << result.graph.size() << ", edges: " << result.graph.edges().size() << "\n";
    std::cout << result.run_id << "\n";
    return result.status == store::RunStatus::complete ? 0 : 1;
}

int cmd_timelines(const std::string& store_root, const std::string& run_id, const std::string& criterion_path,
                  std::size_t k, double lambda, std::size_t beam_width, const std::string& out_dir) {
    store::EnsembleStore store(store_root);
    const auto graph = store.load(run_id);
    const auto criterion = timeline::load_criterion(criterion_path);
    criterion.check_against(graph.flow());
    timeline::DiversityConfig diversity;
    diversity.k = k;
    diversity.lambda = lambda;
    diversity.beam_width = beam_width;
    if (auto why = diversity.check(); !why.empty()) {
        throw Error(why);
    }
    const auto found = timeline::extract_top_k(graph, criterion, diversity);
    std::printf("%-4s %-20s %12s %9s %6s  %s\n", "rank", "timeline", "score", "coverage", "nodes", "file");
    for (std::size_t i = 0; i < found.size(); ++i) {
        const auto& t = found[i];
        service::save_timeline_record(store.run_dir(run_id), t, criterion);
        const auto path = timeline::write_timeline_export(out_dir, timeline::export_timeline(graph, t, criterion));
        std::printf("%-4zu %-20s %12.6g %9.4f %6zu  %s\n", i + 1, t.id.c_str(), t.score, t.coverage, t.nodes.size(),
                    path.string().c_str());
    }
    if (found.size() < k) {
        std::cerr << "warning: only " << found.size() << " timeline(s) available for k=" << k << "\n";
    }
    return 0;
}

int cmd_export(const std::string& store_root, const std::string& run_id, const std::string& timeline_id,
               std::string out_dir) {
    store::EnsembleStore store(store_root);
    const auto graph = store.load(run_id);
    const auto record = service::load_timeline_record(store.run_dir(run_id), timeline_id);
    if (!record) {
        std::cerr << "error: unknown timeline '" << timeline_id << "' in run " << run_id << "\n";
        return 1;
    }
    if (out_dir.empty()) {
        out_dir = (store.run_dir(run_id) / "exports").string();
    }
    std::cout << service::export_from_record(graph, *record, out_dir).string() << "\n";
    return 0;
}

int cmd_serve(const service::ServiceConfig& config, const std::string& host, int port) {
    service::ApiService api(config);
    service::HttpServer server(api);
    const int bound = server.bind(host, port);
    if (bound < 0) {
        std::cerr << "error: cannot bind " << host << ":" << port << "\n";
        return 1;
    }
    std::cerr << "serving " << config.store_root.string() << " on http://" << host << ":" << bound << "\n";
    return server.listen() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ensemble runs and timeline extraction"};
    app.require_subcommand(1);
    std::string store_root = env_or("STRAND_STORE", "runs");
    app.add_option("--store", store_root, "Run store root (env STRAND_STORE)");

    auto* run = app.add_subcommand("run", "Execute a flow and print the run id");
    std::vector<std::string> run_files;
    std::size_t workers = 0;
    run->add_option("files", run_files, "[flow] run-config")->required()->expected(1, 2)->check(CLI::ExistingFile);
    run->add_option("-w,--workers", workers, "Worker threads (env STRAND_WORKERS)");

    auto* validate = app.add_subcommand("validate", "Check a flow (and optionally a run config)");
    std::vector<std::string> validate_files;
    validate->add_option("files", validate_files, "flow [run-config]")
        ->required()
        ->expected(1, 2)
        ->check(CLI::ExistingFile);

    auto* timelines = app.add_subcommand("timelines", "Extract top-k timelines and write export files");
    std::string run_id;
    std::string criterion_path;
    std::size_t k = 1;
    double lambda = 0.0;
    std::size_t beam_width = timeline::kDefaultBeamWidth;
    std::string out_dir = "timelines";
    timelines->add_option("run_id", run_id)->required();
    timelines->add_option("criterion", criterion_path, "Criterion file")->required()->check(CLI::ExistingFile);
    timelines->add_option("-k", k, "Number of timelines")->check(CLI::PositiveNumber);
    timelines->add_option("-l,--lambda", lambda, "Diversity weight in [0, 1]")->check(CLI::Range(0.0, 1.0));
    timelines->add_option("--beam-width", beam_width)->check(CLI::PositiveNumber);
    timelines->add_option("-o,--out", out_dir, "Output directory");

    auto* exp = app.add_subcommand("export", "Write the export file of an extracted timeline");
    std::string export_run;
    std::string export_tid;
    std::string export_out;
    exp->add_option("run_id", export_run)->required();
    exp->add_option("timeline_id", export_tid)->required();
    exp->add_option("-o,--out", export_out, "Output directory (default <run>/exports)");

    auto* serve = app.add_subcommand("serve", "HTTP API for the explorer");
    std::string host = env_or("STRAND_HOST", "127.0.0.1");
    int port = std::atoi(env_or("STRAND_PORT", "8080").c_str());
    long budget_ms = std::atol(env_or("STRAND_TIME_BUDGET", "10000").c_str());
    std::string static_dir = env_or("STRAND_STATIC_DIR", "");
    serve->add_option("--host", host, "Bind address (env STRAND_HOST)");
    serve->add_option("--port", port, "Port, 0 for any (env STRAND_PORT)");
    serve->add_option("--time-budget", budget_ms, "Extraction budget in ms (env STRAND_TIME_BUDGET)");
    serve->add_option("--static-dir", static_dir, "Explorer assets (env STRAND_STATIC_DIR)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return cmd_run(run_files, store_root, workers);
        }
        if (*validate) {
            return cmd_validate(validate_files);
        }
        if (*timelines) {
            return cmd_timelines(store_root, run_id, criterion_path, k, lambda, beam_width, out_dir);
        }
        if (*exp) {
            return cmd_export(store_root, export_run, export_tid, export_out);
        }
        if (*serve) {
            service::ServiceConfig config;
            config.store_root = store_root;
            config.time_budget = std::chrono::milliseconds(budget_ms);
            if (!static_dir.empty()) {
                config.static_dir = static_dir;
            }
            return cmd_serve(config, host, port);
        }
    } catch (const InvalidFlow& e) {
        std::cerr << "invalid flow:\n" << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
