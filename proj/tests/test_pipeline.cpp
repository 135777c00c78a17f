#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evchain/m2t.hpp"
#include "evchain/pipeline.hpp"
#include "evchain/sha256.hpp"
#include "evchain/text.hpp"

#include "test_support.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>

using namespace evchain;
using namespace evchain::pipeline;

namespace fs = std::filesystem;

namespace {

PipelineConfig demo_config(const testsup::TempDir& out) {
    PipelineConfig cfg = load_config(testsup::assets_dir() + "/aeb/pipeline.json");
    cfg.out_dir = out.path();
    return cfg;
}

} // namespace

TEST_CASE("config loading resolves paths relative to the config file") {
    PipelineConfig cfg = load_config(testsup::assets_dir() + "/aeb/pipeline.json");
    CHECK(fs::exists(cfg.paths.requirements));
    CHECK(fs::exists(cfg.paths.component_registry));
    CHECK(fs::exists(cfg.paths.metamodel));
    REQUIRE(cfg.paths.fixtures.size() == 1);
    CHECK(fs::exists(cfg.paths.fixtures[0]));
    CHECK(cfg.backend.kind == "replay");
    CHECK(cfg.strict);
    CHECK(cfg.scenario.duration_s == 15.0);
    CHECK(*cfg.frequency_policy.default_hz == 20.0);
}

TEST_CASE("full pipeline run: replay fixtures to a passing scenario") {
    testsup::TempDir out("run");
    PipelineConfig cfg = demo_config(out);

    PipelineReport report = run_pipeline(cfg);
    CHECK(report.exit_code == kExitOk);
    REQUIRE(report.stages.size() == 5);
    for (const auto& s : report.stages)
        CHECK_MESSAGE(s.ok, s.name.c_str(), ": ", s.detail.c_str());

    // Artifacts on disk: description, diff, model, validation, four node
    // files, the manifest, two component sources, the trace set, report.
    for (const char* rel :
         {"event_chain.json", "diff.json", "instance_model.json", "validation.json",
          "gen/objectdetection_node.py", "gen/ttc_calculation_node.py",
          "gen/braking_decision_node.py", "gen/carla_vehicle_control_node.py",
          "gen/wiring_manifest.json", "components/TTC_Calculation.py",
          "components/Braking_Decision.py", "trace.csv", "messages.jsonl",
          "metrics.json", "report.json"})
        CHECK_MESSAGE(fs::exists(out.file(rel)), rel);

    // Generated node files match the committed goldens.
    for (const char* name :
         {"objectdetection_node.py", "ttc_calculation_node.py",
          "braking_decision_node.py", "carla_vehicle_control_node.py",
          "wiring_manifest.json"})
        CHECK(read_file(out.file("gen/") + name) ==
              read_file(testsup::golden_dir() + "/" + name));

    // The validation artifact reports every invariant as passed.
    std::string validation = read_file(out.file("validation.json"));
    CHECK(validation.find("\"all_passed\": true") != std::string::npos);
    CHECK(validation.find("\"fail\"") == std::string::npos);

    // Plot renders from the written trace.
    StageResult plot = stage_plot(cfg, "");
    CHECK(plot.ok);
    CHECK(fs::exists(out.file("trace.svg")));
}

TEST_CASE("stage reruns reproduce their outputs byte-identically") {
    testsup::TempDir out("rerun");
    PipelineConfig cfg = demo_config(out);
    REQUIRE(run_pipeline(cfg).exit_code == kExitOk);

    std::string manifest_before = read_file(out.file("gen/wiring_manifest.json"));
    std::string model_before = read_file(out.file("instance_model.json"));
    std::string trace_before = read_file(out.file("trace.csv"));

    CHECK(stage_model(cfg).ok);
    CHECK(stage_generate(cfg).ok);
    CHECK(stage_simulate(cfg).ok);

    CHECK(read_file(out.file("gen/wiring_manifest.json")) == manifest_before);
    CHECK(read_file(out.file("instance_model.json")) == model_before);
    CHECK(read_file(out.file("trace.csv")) == trace_before);
}

TEST_CASE("validation gate: a constraint-violating model halts before generation") {
    testsup::TempDir out("gate");
    PipelineConfig cfg = demo_config(out);
    // Slower consumer downstream: NextstepFrequencyEqualOrHigher fails.
    cfg.frequency_policy.overrides["TTC_Calculation"] = 50.0;

    PipelineReport report = run_pipeline(cfg);
    CHECK(report.exit_code == kExitValidationGate);
    REQUIRE(report.stage("validate"));
    CHECK_FALSE(report.stage("validate")->ok);
    CHECK(report.stage("generate") == nullptr);

    // Gate soundness: no generated code artifacts after the halt.
    CHECK_FALSE(fs::exists(out.file("gen")));
    CHECK_FALSE(fs::exists(out.file("components")));
    CHECK(fs::exists(out.file("validation.json")));
    CHECK(fs::exists(out.file("report.json")));

    // The standalone generate stage refuses the same model.
    StageResult gen = stage_generate(cfg);
    CHECK_FALSE(gen.ok);
    CHECK(doctest::Contains("validation gate").checkWith(gen.detail.c_str()));
    CHECK_FALSE(fs::exists(out.file("gen")));
}

TEST_CASE("missing replay fixture fails the stage with a nonzero exit") {
    testsup::TempDir out("miss");
    PipelineConfig cfg = demo_config(out);
    testsup::TempDir fixtures("fixtures");
    // A fixture that only answers the event-chain prompt: code acquisition
    // must fail.
    std::string chain_only = read_file(cfg.paths.fixtures[0]);
    auto doc = nlohmann::json::parse(chain_only);
    nlohmann::json pruned = doc;
    pruned["responses"] = nlohmann::json::object();
    for (auto& [hash, response] : doc["responses"].items())
        if (response.get<std::string>().find("json") != std::string::npos)
            pruned["responses"][hash] = response;
    write_file(fixtures.file("partial.json"), pruned.dump(2));
    cfg.paths.fixtures = {fixtures.file("partial.json")};

    PipelineReport report = run_pipeline(cfg);
    CHECK(report.exit_code == kExitBackend);
    REQUIRE(report.stage("generate"));
    CHECK_FALSE(report.stage("generate")->ok);
    CHECK(doctest::Contains("no fixture for prompt hash")
              .checkWith(report.stage("generate")->detail.c_str()));
}

TEST_CASE("simulation failure maps to exit code 4") {
    testsup::TempDir out("simfail");
    PipelineConfig cfg = demo_config(out);
    // Too little runway from full speed: the ego cannot stop in time.
    cfg.scenario.initial_gap_m = 4.0;
    cfg.scenario.initial_speed_mps = 15.0;

    PipelineReport report = run_pipeline(cfg);
    CHECK(report.exit_code == kExitSimulation);
    REQUIRE(report.stage("simulate"));
    CHECK_FALSE(report.stage("simulate")->ok);
    CHECK(doctest::Contains("collision").checkWith(report.stage("simulate")->detail.c_str()));
}

TEST_CASE("eval stage writes the report artifact and table") {
    testsup::TempDir out("eval");
    PipelineConfig cfg = demo_config(out);
    cfg.eval_runs = 2;

    StageResult r = stage_eval(cfg);
    CHECK(r.ok);
    CHECK(fs::exists(out.file("eval_report.json")));
    CHECK(doctest::Contains("100% (2/2)").checkWith(r.detail.c_str()));
}

TEST_CASE("the installed CLI drives the same pipeline") {
    testsup::TempDir out("cli");
    std::string binary = std::string(EVCHAIN_BINARY_DIR) + "/evchain";
    REQUIRE(fs::exists(binary));
    std::string cmd = binary + " --config " + testsup::assets_dir() +
                      "/aeb/pipeline.json --out " + out.path() +
                      " run > " + out.file("cli.log") + " 2>&1";
    int rc = std::system(cmd.c_str());
    CHECK(rc == 0);
    CHECK(fs::exists(out.file("gen/wiring_manifest.json")));
    CHECK(fs::exists(out.file("trace.csv")));

    std::string log = read_file(out.file("cli.log"));
    CHECK(log.find("[simulate] ok") != std::string::npos);
}

TEST_CASE("agent-path model construction from a replay fixture") {
    testsup::TempDir out("agent");
    testsup::TempDir fixtures("agentfix");
    PipelineConfig cfg = demo_config(out);

    // Run ingest with the demo fixture first so the description exists.
    REQUIRE(stage_ingest(cfg).ok);

    // Build a fixture answering the instance-model prompt with the model
    // the deterministic path would produce.
    REQUIRE(stage_model(cfg).ok);
    std::string model_json = read_file(out.file("instance_model.json"));

    llm::SlotMap slots = {
        {"metamodel", read_file(cfg.paths.metamodel)},
        {"one_shot_example", llm::builtin::instance_model_one_shot()},
        {"event_chain_description", read_file(out.file("event_chain.json"))}};
    std::string prompt = llm::build_prompt(llm::PromptKind::InstanceModel, slots);
    std::map<std::string, std::string> responses;
    responses[sha256_hex(prompt)] = "```json\n" + model_json + "\n```\n";
    write_file(fixtures.file("model.json"),
               llm::fixture_to_json("agent", responses));

    cfg.model_source = "agent";
    cfg.paths.fixtures = {fixtures.file("model.json")};
    StageResult r = stage_model(cfg);
    CHECK(r.ok);
    CHECK(doctest::Contains("agent path").checkWith(r.detail.c_str()));
    CHECK(read_file(out.file("instance_model.json")) == model_json);
}

TEST_CASE("shipped asset files stay in sync with the built-in definitions") {
    std::string assets = testsup::assets_dir();
    CHECK(read_file(assets + "/metamodel.json") ==
          evchain::builtin::event_chain_metamodel_json());
    CHECK(read_file(assets + "/constraints.ocl") ==
          evchain::builtin::design_constraints_text());
    CHECK(read_file(assets + "/templates/ros_node.tmpl") ==
          m2t::builtin::ros_node_template());
    CHECK(read_file(assets + "/templates/wiring_manifest.tmpl") ==
          m2t::builtin::wiring_manifest_template());
    CHECK(read_file(assets + "/prompts/one_shot_instance_model.txt") ==
          llm::builtin::instance_model_one_shot());
}

TEST_CASE("committed demo fixture answers the exact prompts the pipeline builds") {
    PipelineConfig cfg = load_config(testsup::assets_dir() + "/aeb/pipeline.json");
    llm::ReplayBackend backend(cfg.paths.fixtures.at(0));

    auto reg = ingest::parse_component_registry(read_file(cfg.paths.component_registry));
    auto sig = ingest::parse_signal_registry(read_file(cfg.paths.signal_registry));
    std::string prompt = llm::build_prompt(
        llm::PromptKind::EventChain,
        {{"requirements", read_file(cfg.paths.requirements)},
         {"existing_components", ingest::component_registry_to_json(reg)},
         {"existing_signals", ingest::signal_registry_to_json(sig)}});
    std::string response = backend.complete(prompt); // throws on drift
    CHECK(response.find("```json") != std::string::npos);
}
