#pragma once

#include "evchain/event_chain.hpp"
#include "evchain/llm.hpp"
#include "evchain/sim.hpp"

#include <optional>
#include <string>
#include <vector>

namespace evchain::pipeline {

// Workflow front end: ingest -> model -> validate -> generate -> simulate,
// plus the evaluation harness and trace plotting. Every stage consumes and
// produces file artifacts under the output directory, so stages can be run
// individually and rerun reproducibly.

constexpr int kExitOk = 0;
constexpr int kExitValidationGate = 2;
constexpr int kExitBackend = 3;
constexpr int kExitSimulation = 4;

struct PipelineConfig {
    struct Paths {
        std::string requirements;
        std::string event_chain; // optional: skip the agent, ingest this file
        std::string component_registry;
        std::string signal_registry;
        std::string metamodel;          // empty = built-in
        std::string constraints;        // empty = built-in
        std::string ros_template;       // empty = built-in
        std::string manifest_template;  // empty = built-in
        std::vector<std::string> fixtures;
    } paths;

    struct BackendSel {
        std::string kind = "replay"; // replay | http-chat
        std::string name = "replay";
        std::string endpoint_url;
        std::string model;
        std::string api_key_env = "LLM_API_KEY";
        double temperature = 0.2;
        int max_tokens = 4096;
    } backend;

    std::string model_source = "deterministic"; // deterministic | agent
    std::string code_source = "agent";          // agent | reference

    ingest::FrequencyPolicy frequency_policy;
    sim::AebScenario scenario;

    std::string out_dir = "out";
    bool strict = false;
    bool record_fixtures = false;
    int eval_runs = 5;
};

PipelineConfig load_config(const std::string& config_json_path);

struct StageResult {
    std::string name;
    bool ok = true;
    std::string detail;
    std::vector<std::string> artifacts;
};

struct PipelineReport {
    std::vector<StageResult> stages;
    int exit_code = kExitOk;

    const StageResult* stage(const std::string& name) const;
};

// Individual stages (the CLI subcommands). Each returns its StageResult and
// writes its artifacts; a failed stage carries the failure detail and the
// matching exit code is derivable from its name.
StageResult stage_ingest(const PipelineConfig& cfg);
StageResult stage_model(const PipelineConfig& cfg);
StageResult stage_validate(const PipelineConfig& cfg);
StageResult stage_generate(const PipelineConfig& cfg);
StageResult stage_simulate(const PipelineConfig& cfg);
StageResult stage_eval(const PipelineConfig& cfg);
StageResult stage_plot(const PipelineConfig& cfg, const std::string& trace_csv_path);

// The whole chain. Halts at the validation gate (exit 2) without writing
// any generated code artifacts; backend failures exit 3, a failing scenario
// exits 4. The report is written to <out>/report.json.
PipelineReport run_pipeline(const PipelineConfig& cfg);

std::string report_to_json(const PipelineReport& report);

} // namespace evchain::pipeline
