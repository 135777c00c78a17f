#include "evchain/pipeline.hpp"

#include "evchain/m2t.hpp"
#include "evchain/model_io.hpp"
#include "evchain/ocl.hpp"
#include "evchain/text.hpp"

#include <json.hpp>

#include <filesystem>

namespace evchain::pipeline {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string out_path(const PipelineConfig& cfg, const std::string& rel) {
    return (fs::path(cfg.out_dir) / rel).string();
}

std::string load_or_builtin(const std::string& path, const std::string& builtin_text) {
    return path.empty() ? builtin_text : read_file(path);
}

std::shared_ptr<const Metamodel> metamodel_for(const PipelineConfig& cfg) {
    if (cfg.paths.metamodel.empty())
        return builtin::event_chain_metamodel();
    return std::make_shared<const Metamodel>(load_metamodel(read_file(cfg.paths.metamodel)));
}

std::unique_ptr<llm::Backend> make_backend(const PipelineConfig& cfg) {
    if (cfg.backend.kind == "replay") {
        if (cfg.paths.fixtures.empty())
            throw Error(ErrorKind::Config, "replay backend needs paths.fixtures");
        return std::make_unique<llm::ReplayBackend>(cfg.paths.fixtures.front());
    }
    if (cfg.backend.kind == "http-chat") {
        llm::HttpBackendConfig http;
        http.endpoint_url = cfg.backend.endpoint_url;
        http.model = cfg.backend.model;
        http.api_key_env = cfg.backend.api_key_env;
        http.temperature = cfg.backend.temperature;
        http.max_tokens = cfg.backend.max_tokens;
        auto backend = std::make_unique<llm::HttpChatBackend>(std::move(http));
        if (cfg.record_fixtures)
            backend->enable_recording(
                (fs::path(cfg.out_dir) / "fixtures_captured.json").string());
        return backend;
    }
    throw Error(ErrorKind::Config, "unknown backend kind '" + cfg.backend.kind + "'");
}

StageResult fail_stage(const std::string& name, const std::string& detail) {
    StageResult r;
    r.name = name;
    r.ok = false;
    r.detail = detail;
    return r;
}

void write_artifact(StageResult& r, const std::string& path, const std::string& content) {
    write_file(path, content);
    r.artifacts.push_back(path);
}

} // namespace

PipelineConfig load_config(const std::string& config_json_path) {
    json doc;
    try {
        doc = json::parse(read_file(config_json_path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, std::string("pipeline config: ") + e.what());
    }
    PipelineConfig cfg;
    fs::path base = fs::path(config_json_path).parent_path();
    auto resolve = [&](const std::string& p) {
        if (p.empty() || fs::path(p).is_absolute())
            return p;
        return (base / p).string();
    };

    if (auto it = doc.find("paths"); it != doc.end()) {
        const json& p = *it;
        cfg.paths.requirements = resolve(p.value("requirements", ""));
        cfg.paths.event_chain = resolve(p.value("event_chain", ""));
        cfg.paths.component_registry = resolve(p.value("component_registry", ""));
        cfg.paths.signal_registry = resolve(p.value("signal_registry", ""));
        cfg.paths.metamodel = resolve(p.value("metamodel", ""));
        cfg.paths.constraints = resolve(p.value("constraints", ""));
        cfg.paths.ros_template = resolve(p.value("ros_template", ""));
        cfg.paths.manifest_template = resolve(p.value("manifest_template", ""));
        if (p.contains("fixtures"))
            for (const auto& f : p["fixtures"])
                cfg.paths.fixtures.push_back(resolve(f.get<std::string>()));
    }
    if (auto it = doc.find("backend"); it != doc.end()) {
        const json& b = *it;
        cfg.backend.kind = b.value("kind", cfg.backend.kind);
        cfg.backend.name = b.value("name", cfg.backend.name);
        cfg.backend.endpoint_url = b.value("endpoint_url", cfg.backend.endpoint_url);
        cfg.backend.model = b.value("model", cfg.backend.model);
        cfg.backend.api_key_env = b.value("api_key_env", cfg.backend.api_key_env);
        cfg.backend.temperature = b.value("temperature", cfg.backend.temperature);
        cfg.backend.max_tokens = b.value("max_tokens", cfg.backend.max_tokens);
    }
    cfg.model_source = doc.value("model_source", cfg.model_source);
    cfg.code_source = doc.value("code_source", cfg.code_source);
    if (auto it = doc.find("frequency_policy"); it != doc.end()) {
        const json& f = *it;
        if (f.contains("default"))
            cfg.frequency_policy.default_hz = f["default"].get<double>();
        if (f.contains("overrides"))
            for (const auto& [name, hz] : f["overrides"].items())
                cfg.frequency_policy.overrides[name] = hz.get<double>();
    }
    if (auto it = doc.find("scenario"); it != doc.end()) {
        const json& s = *it;
        cfg.scenario.initial_speed_mps = s.value("initial_speed", cfg.scenario.initial_speed_mps);
        cfg.scenario.initial_gap_m = s.value("initial_gap", cfg.scenario.initial_gap_m);
        cfg.scenario.max_deceleration_mps2 =
            s.value("max_deceleration", cfg.scenario.max_deceleration_mps2);
        cfg.scenario.dt_s = s.value("dt", cfg.scenario.dt_s);
        cfg.scenario.duration_s = s.value("duration", cfg.scenario.duration_s);
        cfg.scenario.sensor_frequency_hz =
            s.value("sensor_frequency", cfg.scenario.sensor_frequency_hz);
    }
    cfg.out_dir = doc.value("out_dir", cfg.out_dir);
    if (!fs::path(cfg.out_dir).is_absolute())
        cfg.out_dir = resolve(cfg.out_dir);
    cfg.strict = doc.value("strict", cfg.strict);
    cfg.record_fixtures = doc.value("record_fixtures", cfg.record_fixtures);
    cfg.eval_runs = doc.value("eval_runs", cfg.eval_runs);

    // Every referenced input must exist before any stage starts.
    std::vector<std::string> referenced = {
        cfg.paths.requirements,      cfg.paths.event_chain,
        cfg.paths.component_registry, cfg.paths.signal_registry,
        cfg.paths.metamodel,         cfg.paths.constraints,
        cfg.paths.ros_template,      cfg.paths.manifest_template};
    referenced.insert(referenced.end(), cfg.paths.fixtures.begin(),
                      cfg.paths.fixtures.end());
    for (const auto& p : referenced)
        if (!p.empty() && !fs::exists(p))
            throw Error(ErrorKind::Config, "configured path does not exist: " + p);
    return cfg;
}

const StageResult* PipelineReport::stage(const std::string& name) const {
    for (const auto& s : stages)
        if (s.name == name)
            return &s;
    return nullptr;
}

StageResult stage_ingest(const PipelineConfig& cfg) {
    StageResult r;
    r.name = "ingest";
    try {
        std::string description_json;
        if (!cfg.paths.event_chain.empty()) {
            description_json = read_file(cfg.paths.event_chain);
        } else {
            if (cfg.paths.requirements.empty())
                throw Error(ErrorKind::Config,
                            "ingest needs paths.event_chain or paths.requirements");
            ingest::ComponentRegistry reg =
                ingest::parse_component_registry(read_file(cfg.paths.component_registry));
            ingest::SignalRegistry sig =
                ingest::parse_signal_registry(read_file(cfg.paths.signal_registry));
            std::string prompt = llm::build_prompt(
                llm::PromptKind::EventChain,
                {{"requirements", read_file(cfg.paths.requirements)},
                 {"existing_components", ingest::component_registry_to_json(reg)},
                 {"existing_signals", ingest::signal_registry_to_json(sig)}});
            auto backend = make_backend(cfg);
            llm::AgentResult extraction = llm::extract_artifact(
                llm::ArtifactKind::EventChainJson, backend->complete(prompt));
            if (!extraction.ok())
                throw Error(ErrorKind::Backend, extraction.diagnostic);
            description_json = *extraction.artifact;
        }

        ingest::EventChainDescription desc = ingest::parse_event_chain(description_json);
        ingest::ComponentRegistry reg =
            ingest::parse_component_registry(read_file(cfg.paths.component_registry));
        ingest::ComponentDiff diff = ingest::diff_components(desc, reg);

        write_artifact(r, out_path(cfg, "event_chain.json"), description_json);
        ordered_json jd;
        jd["existing"] = diff.existing;
        jd["to_generate"] = diff.to_generate;
        write_artifact(r, out_path(cfg, "diff.json"), jd.dump(2) + "\n");
        r.detail = std::to_string(desc.components.size()) + " components, " +
                   std::to_string(diff.to_generate.size()) + " to generate";
    } catch (const Error& e) {
        return fail_stage("ingest", e.what());
    }
    return r;
}

StageResult stage_model(const PipelineConfig& cfg) {
    StageResult r;
    r.name = "model";
    try {
        std::string desc_path = out_path(cfg, "event_chain.json");
        if (!fs::exists(desc_path))
            throw Error(ErrorKind::Config,
                        "missing " + desc_path + " (run the ingest stage first)");
        ingest::EventChainDescription desc =
            ingest::parse_event_chain(read_file(desc_path));
        ingest::ComponentRegistry reg =
            ingest::parse_component_registry(read_file(cfg.paths.component_registry));
        auto mm = metamodel_for(cfg);

        InstanceModel model = [&]() {
            if (cfg.model_source == "agent") {
                auto backend = make_backend(cfg);
                std::string prompt = llm::build_prompt(
                    llm::PromptKind::InstanceModel,
                    {{"metamodel", load_or_builtin(cfg.paths.metamodel,
                                                   builtin::event_chain_metamodel_json())},
                     {"one_shot_example", llm::builtin::instance_model_one_shot()},
                     {"event_chain_description", read_file(desc_path)}});
                llm::AgentResult extraction = llm::extract_artifact(
                    llm::ArtifactKind::InstanceModelJson, backend->complete(prompt));
                if (!extraction.ok())
                    throw Error(ErrorKind::Backend, extraction.diagnostic);
                return load_instance(*extraction.artifact, mm);
            }
            return ingest::lower_to_instance(desc, reg, cfg.frequency_policy, mm);
        }();

        write_artifact(r, out_path(cfg, "instance_model.json"), serialize_instance(model));
        r.detail = std::to_string(model.objects().size()) + " objects (" +
                   cfg.model_source + " path)";
    } catch (const Error& e) {
        return fail_stage("model", e.what());
    }
    return r;
}

StageResult stage_validate(const PipelineConfig& cfg) {
    StageResult r;
    r.name = "validate";
    try {
        std::string model_path = out_path(cfg, "instance_model.json");
        if (!fs::exists(model_path))
            throw Error(ErrorKind::Config,
                        "missing " + model_path + " (run the model stage first)");
        auto mm = metamodel_for(cfg);
        InstanceModel model = load_instance(read_file(model_path), mm);
        ocl::ConstraintSet cs = ocl::parse_constraints(
            load_or_builtin(cfg.paths.constraints, builtin::design_constraints_text()));
        ocl::ValidationReport report = ocl::evaluate(cs, model);
        write_artifact(r, out_path(cfg, "validation.json"), ocl::report_to_json(report));
        r.ok = report.all_passed();
        r.detail = std::to_string(report.count(ocl::Verdict::Pass)) + " pass, " +
                   std::to_string(report.count(ocl::Verdict::Fail)) + " fail, " +
                   std::to_string(report.count(ocl::Verdict::Error)) + " error";
    } catch (const Error& e) {
        return fail_stage("validate", e.what());
    }
    return r;
}

StageResult stage_generate(const PipelineConfig& cfg) {
    StageResult r;
    r.name = "generate";
    try {
        std::string model_path = out_path(cfg, "instance_model.json");
        if (!fs::exists(model_path))
            throw Error(ErrorKind::Config,
                        "missing " + model_path + " (run the model stage first)");
        auto mm = metamodel_for(cfg);
        InstanceModel model = load_instance(read_file(model_path), mm);

        // The validation gate guards generation even when this stage runs
        // standalone.
        ocl::ConstraintSet cs = ocl::parse_constraints(
            load_or_builtin(cfg.paths.constraints, builtin::design_constraints_text()));
        ocl::ValidationReport validation = ocl::evaluate(cs, model);
        if (!validation.all_passed())
            return fail_stage("generate",
                              "validation gate: instance model violates constraints");

        m2t::TemplateAst ros_template = m2t::parse_template(load_or_builtin(
            cfg.paths.ros_template, m2t::builtin::ros_node_template()));
        m2t::TemplateAst manifest_template = m2t::parse_template(load_or_builtin(
            cfg.paths.manifest_template, m2t::builtin::wiring_manifest_template()));

        m2t::GeneratedFileSet node_files = m2t::render(ros_template, model);
        for (const auto& f : node_files.files)
            write_artifact(r, out_path(cfg, "gen/" + f.name), f.content);
        m2t::GeneratedFileSet manifest = m2t::render(manifest_template, model);
        for (const auto& f : manifest.files)
            write_artifact(r, out_path(cfg, "gen/" + f.name), f.content);

        // Function code for the components the registry does not cover.
        size_t agent_files = 0;
        if (cfg.code_source == "agent") {
            std::string desc_path = out_path(cfg, "event_chain.json");
            if (!fs::exists(desc_path))
                throw Error(ErrorKind::Config,
                            "missing " + desc_path + " (run the ingest stage first)");
            ingest::EventChainDescription desc =
                ingest::parse_event_chain(read_file(desc_path));
            ingest::ComponentRegistry reg = ingest::parse_component_registry(
                read_file(cfg.paths.component_registry));
            ingest::ComponentDiff diff = ingest::diff_components(desc, reg);
            auto backend = make_backend(cfg);
            for (const auto& name : diff.to_generate) {
                const ingest::ComponentDesc* comp = nullptr;
                for (const auto& c : desc.components)
                    if (c.name == name)
                        comp = &c;
                std::string prompt = llm::build_prompt(
                    llm::PromptKind::FunctionCode,
                    {{"submodule_description", ingest::component_to_json(*comp)}});
                llm::AgentResult extraction = llm::extract_artifact(
                    llm::ArtifactKind::CodeText, backend->complete(prompt));
                if (!extraction.ok())
                    throw Error(ErrorKind::Backend, name + ": " + extraction.diagnostic);
                std::vector<std::string> input_names;
                for (const auto& port : comp->inputs)
                    for (const auto& value : port.values)
                        input_names.push_back(value.name);
                std::string diag;
                if (!llm::execute_signature_matches(*extraction.artifact, input_names,
                                                    &diag))
                    throw Error(ErrorKind::Backend, name + ": " + diag);
                write_artifact(r, out_path(cfg, "components/" + name + ".py"),
                               *extraction.artifact);
                ++agent_files;
            }
        }
        r.detail = std::to_string(node_files.files.size()) + " node files, " +
                   std::to_string(manifest.files.size()) + " manifest, " +
                   std::to_string(agent_files) + " component files";
    } catch (const Error& e) {
        return fail_stage("generate", e.what());
    }
    return r;
}

StageResult stage_simulate(const PipelineConfig& cfg) {
    StageResult r;
    r.name = "simulate";
    try {
        std::string manifest_path = out_path(cfg, "gen/wiring_manifest.json");
        if (!fs::exists(manifest_path))
            throw Error(ErrorKind::Config,
                        "missing " + manifest_path + " (run the generate stage first)");
        sim::WiringOptions options;
        options.strict = cfg.strict;
        options.world_topics = cfg.scenario.world_topics();
        sim::NodeGraph graph = sim::load_wiring(read_file(manifest_path), options);
        sim::BehaviorRegistry behaviors = sim::reference_behaviors();
        sim::ScenarioTrace trace = sim::run_scenario(graph, behaviors, cfg.scenario);

        write_artifact(r, out_path(cfg, "trace.csv"), sim::trace_to_csv(trace));
        write_artifact(r, out_path(cfg, "messages.jsonl"), sim::messages_to_jsonl(trace));
        write_artifact(r, out_path(cfg, "metrics.json"), sim::stats_to_json(trace));

        bool passed = sim::scenario_passed(trace);
        r.ok = passed;
        r.detail = "final gap " + format_double(trace.final_gap()) + " m, " +
                   (passed ? "stopped safely"
                           : (trace.collided() ? "collision" : "did not stop"));
    } catch (const Error& e) {
        return fail_stage("simulate", e.what());
    }
    return r;
}

StageResult stage_eval(const PipelineConfig& cfg) {
    StageResult r;
    r.name = "eval";
    try {
        llm::EvalConfig ec;
        llm::EvalBackendSpec spec;
        spec.name = cfg.backend.name;
        if (cfg.backend.kind == "replay") {
            spec.fixture_paths = cfg.paths.fixtures;
        } else {
            llm::HttpBackendConfig http;
            http.endpoint_url = cfg.backend.endpoint_url;
            http.model = cfg.backend.model;
            http.api_key_env = cfg.backend.api_key_env;
            http.temperature = cfg.backend.temperature;
            http.max_tokens = cfg.backend.max_tokens;
            spec.http = http;
        }
        ec.backends.push_back(std::move(spec));
        ec.runs = cfg.eval_runs;
        ec.requirements_text = read_file(cfg.paths.requirements);
        ec.component_registry_json = ingest::component_registry_to_json(
            ingest::parse_component_registry(read_file(cfg.paths.component_registry)));
        ec.signal_registry_json = ingest::signal_registry_to_json(
            ingest::parse_signal_registry(read_file(cfg.paths.signal_registry)));
        ec.frequency_policy = cfg.frequency_policy;
        ec.metamodel = metamodel_for(cfg);
        if (!cfg.paths.constraints.empty())
            ec.constraints_text = read_file(cfg.paths.constraints);
        if (!cfg.paths.manifest_template.empty())
            ec.manifest_template_text = read_file(cfg.paths.manifest_template);
        sim::BehaviorRegistry behaviors = sim::reference_behaviors();
        ec.behaviors = &behaviors;
        ec.scenario = cfg.scenario;

        llm::EvalReport report = llm::run_evaluation(ec);
        write_artifact(r, out_path(cfg, "eval_report.json"),
                       llm::eval_report_to_json(report));
        r.detail = "\n" + llm::eval_report_to_table(report);
    } catch (const Error& e) {
        return fail_stage("eval", e.what());
    }
    return r;
}

StageResult stage_plot(const PipelineConfig& cfg, const std::string& trace_csv_path) {
    StageResult r;
    r.name = "plot";
    try {
        std::string path =
            trace_csv_path.empty() ? out_path(cfg, "trace.csv") : trace_csv_path;
        sim::ScenarioTrace trace = sim::trace_from_csv(read_file(path));
        write_artifact(r, out_path(cfg, "trace.svg"), sim::trace_to_svg(trace));
        r.detail = std::to_string(trace.ticks.size()) + " ticks plotted";
    } catch (const Error& e) {
        return fail_stage("plot", e.what());
    }
    return r;
}

PipelineReport run_pipeline(const PipelineConfig& cfg) {
    PipelineReport report;
    auto push = [&](StageResult r) -> bool {
        report.stages.push_back(std::move(r));
        return report.stages.back().ok;
    };

    bool ok = push(stage_ingest(cfg)) && push(stage_model(cfg));
    if (ok && !push(stage_validate(cfg))) {
        // Gate: constraint violations stop the pipeline before anything is
        // generated.
        report.exit_code = kExitValidationGate;
        ok = false;
    } else if (!ok) {
        report.exit_code = kExitBackend;
    }

    if (ok) {
        if (!push(stage_generate(cfg))) {
            report.exit_code = kExitBackend;
            ok = false;
        }
    }
    if (ok) {
        if (!push(stage_simulate(cfg))) {
            report.exit_code = kExitSimulation;
            ok = false;
        }
    }

    write_file(out_path(cfg, "report.json"), report_to_json(report));
    return report;
}

std::string report_to_json(const PipelineReport& report) {
    ordered_json doc;
    doc["stages"] = ordered_json::array();
    for (const auto& s : report.stages) {
        ordered_json js;
        js["name"] = s.name;
        js["ok"] = s.ok;
        js["detail"] = s.detail;
        js["artifacts"] = s.artifacts;
        doc["stages"].push_back(std::move(js));
    }
    doc["exit_code"] = report.exit_code;
    return doc.dump(2) + "\n";
}

} // namespace evchain::pipeline
