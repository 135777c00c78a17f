// evchain: event-chain toolchain front end.
//
// Subcommands mirror the workflow stages: ingest, model, validate,
// generate, simulate, eval, plot — plus `run` for the whole chain. Every
// stage reads and writes file artifacts under the configured output
// directory, so stages can be rerun individually and reproduce their
// outputs byte-identically.

#include <CLI11.hpp>

#include "evchain/error.hpp"
#include "evchain/pipeline.hpp"

#include <iostream>

namespace {

using evchain::pipeline::PipelineConfig;
using evchain::pipeline::StageResult;

int finish(const StageResult& r, int failure_exit) {
    std::cout << "[" << r.name << "] " << (r.ok ? "ok" : "FAILED");
    if (!r.detail.empty())
        std::cout << " - " << r.detail;
    std::cout << "\n";
    for (const auto& a : r.artifacts)
        std::cout << "  wrote " << a << "\n";
    return r.ok ? evchain::pipeline::kExitOk : failure_exit;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-chain toolchain: requirements to validated models, "
                 "generated integration code and a simulated braking scenario"};
    app.require_subcommand(1);

    std::string config_path;
    std::string backend_override;
    std::string out_override;
    std::string trace_path;
    int runs_override = 0;
    bool strict = false;
    bool record = false;

    app.add_option("--config", config_path, "pipeline configuration JSON")
        ->required();
    app.add_option("--backend", backend_override, "backend kind override (replay|http-chat)");
    app.add_option("--out", out_override, "output directory override");
    app.add_option("--runs", runs_override, "evaluation run count override");
    app.add_flag("--strict", strict, "reject subscriptions nobody publishes");
    app.add_flag("--record-fixtures", record, "record http responses as replay fixtures");

    auto* cmd_ingest = app.add_subcommand("ingest", "acquire and check the event chain description");
    auto* cmd_model = app.add_subcommand("model", "build the instance model");
    auto* cmd_validate = app.add_subcommand("validate", "evaluate design constraints");
    auto* cmd_generate = app.add_subcommand("generate", "render integration code and manifest");
    auto* cmd_simulate = app.add_subcommand("simulate", "run the braking scenario");
    auto* cmd_eval = app.add_subcommand("eval", "run the N-run evaluation harness");
    auto* cmd_plot = app.add_subcommand("plot", "render a trace CSV as an SVG chart");
    cmd_plot->add_option("--trace", trace_path, "trace CSV (default: <out>/trace.csv)");
    auto* cmd_run = app.add_subcommand("run", "execute the full pipeline");

    // Global flags remain valid after the subcommand token.
    for (auto* sub : app.get_subcommands({}))
        sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig cfg = evchain::pipeline::load_config(config_path);
        if (!backend_override.empty())
            cfg.backend.kind = backend_override;
        if (!out_override.empty())
            cfg.out_dir = out_override;
        if (runs_override > 0)
            cfg.eval_runs = runs_override;
        if (strict)
            cfg.strict = true;
        if (record)
            cfg.record_fixtures = true;

        using namespace evchain::pipeline;
        if (cmd_ingest->parsed())
            return finish(stage_ingest(cfg), kExitBackend);
        if (cmd_model->parsed())
            return finish(stage_model(cfg), kExitBackend);
        if (cmd_validate->parsed())
            return finish(stage_validate(cfg), kExitValidationGate);
        if (cmd_generate->parsed())
            return finish(stage_generate(cfg), kExitValidationGate);
        if (cmd_simulate->parsed())
            return finish(stage_simulate(cfg), kExitSimulation);
        if (cmd_eval->parsed())
            return finish(stage_eval(cfg), kExitBackend);
        if (cmd_plot->parsed())
            return finish(stage_plot(cfg, trace_path), kExitBackend);
        if (cmd_run->parsed()) {
            PipelineReport report = run_pipeline(cfg);
            for (const auto& s : report.stages) {
                std::cout << "[" << s.name << "] " << (s.ok ? "ok" : "FAILED");
                if (!s.detail.empty())
                    std::cout << " - " << s.detail;
                std::cout << "\n";
            }
            std::cout << "report: " << cfg.out_dir << "/report.json (exit "
                      << report.exit_code << ")\n";
            return report.exit_code;
        }
    } catch (const evchain::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return evchain::pipeline::kExitBackend;
    }
    return 0;
}
