#include "evchain/llm.hpp"

#include "evchain/m2t.hpp"
#include "evchain/model_io.hpp"
#include "evchain/ocl.hpp"
#include "evchain/sha256.hpp"
#include "evchain/text.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace evchain::llm {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Shipped prompt templates. These are frozen surface: a checksum test pins
// every byte, and the replay fixtures key on hashes of the rendered text.

const std::string kEventChainTemplate = R"ev(# Task description
You are an automotive software system developer. Your goal is to design a structured event chain description in JSON format for the target system described in the requirements, using existing components and signals/messages where possible. If necessary, define new software components that adhere to the same format.

# Requirements
{{requirements}}

# Guidelines for Building the Event Chain
1. Reuse existing components and topics in the event chain if available.
2. The event chain should contains only necessary inputs and outputs of each components.
3. The component sequence in the generated json description is the software sequence in the event chain.

# Template for Event Chain Description
Use the structure below for each component in the event chain description:
[{
 "name": "ComponentName",
 "description": "What the component does. What is the implementation logic based on requirements",
 "input": [
 {
  "topic": "/some/input_topic",
  "message_type": "some_msgs/MessageType",
  "qos_profile": "quality_of_service_profile",
  "values": [
  {
   "name": "input_value_name",
   "field": "actual_field_name",
   "description": "What this input value means"
  }]
 }],
 "output": [
 (follow the same structure as for the input data)
 ]
}]

# Existing software components
{{existing_components}}

# Existing signals/messages
{{existing_signals}}

# Generated Event Chain
)ev";

const std::string kFunctionCodeTemplate = R"ev(# Task description
You are an automotive software developer responsible for implementing a submodule for the entire system.
The submodule must fulfill the given software description in JSON format.
The submodule is middleware-independent.
A middleware wrapper code (it only passes raw inputs to the submodule and routes outputs from it) can be used to call the submodule and integrate it into the system.

# Instructions
1. The software submodule must be a self-contained, standalone script of a Python class with all dependencies.
2. The submodule functionality should be executed directly in the function execute(input1, input2, ...)
3. The output of function execute(input1, input2, ...) is a dict {'output1':output1, 'output2': output2, ...}
4. The input and output data of execute() should strictly follow the submodule description.
5. Do not include any middleware-specific code.
6. The software submodule must encapsulate all necessary logic, data processing, and state management to fulfill the system functionality.
7. If the software component is stateful, the state must be fully managed internally within the class.
8. The class must be designed to work with raw input values (as passed by the middleware).
9. The class uses the name from the submodule description.
10. Please only implement the submodule, not the function of the entire target system.

# The submodule description
{{submodule_description}}

# The generated sub software module is:
)ev";

const std::string kInstanceModelTemplate = R"ev(# Task description
You are an automotive system modeling expert. Your goal is to translate an event chain description into a conceptual instance model in JSON format. The instance model must conform to the given meta model: every object declares its class, its attribute values and its references to other objects by id.

# Meta model
{{metamodel}}

# One-shot example
{{one_shot_example}}

# Event chain description
{{event_chain_description}}

# Generated Instance Model
)ev";

const std::string kConstraintsTemplate = R"ev(# Task description
You are an automotive system modeling expert. Your goal is to formalize the given natural language design constraints as OCL invariants over the given meta model. Use only attribute and reference names that the meta model defines. Output only the OCL constraint text.

# Meta model
{{metamodel}}

# Design constraints
{{nl_constraint_text}}

# Generated OCL Constraints
)ev";

const std::string& template_text(PromptKind kind) {
    switch (kind) {
    case PromptKind::EventChain: return kEventChainTemplate;
    case PromptKind::FunctionCode: return kFunctionCodeTemplate;
    case PromptKind::InstanceModel: return kInstanceModelTemplate;
    case PromptKind::Constraints: return kConstraintsTemplate;
    }
    throw Error(ErrorKind::Config, "unknown prompt kind");
}

} // namespace

const char* to_string(PromptKind k) {
    switch (k) {
    case PromptKind::EventChain: return "event_chain";
    case PromptKind::FunctionCode: return "function_code";
    case PromptKind::InstanceModel: return "instance_model";
    case PromptKind::Constraints: return "constraints";
    }
    return "?";
}

std::string prompt_template(PromptKind kind) { return template_text(kind); }

std::string build_prompt(PromptKind kind, const SlotMap& slots) {
    const std::string& tpl = template_text(kind);
    std::string out;
    out.reserve(tpl.size());
    std::set<std::string> used;

    size_t pos = 0;
    while (pos < tpl.size()) {
        size_t open = tpl.find("{{", pos);
        if (open == std::string::npos) {
            out.append(tpl, pos, std::string::npos);
            break;
        }
        size_t close = tpl.find("}}", open);
        if (close == std::string::npos)
            throw Error(ErrorKind::Config, "malformed slot in prompt template");
        out.append(tpl, pos, open - pos);
        std::string name = tpl.substr(open + 2, close - open - 2);
        auto it = slots.find(name);
        if (it == slots.end())
            throw Error(ErrorKind::Config, std::string("missing slot '") + name +
                                               "' for prompt '" + to_string(kind) + "'");
        out += it->second;
        used.insert(name);
        pos = close + 2;
    }
    for (const auto& [name, value] : slots)
        if (!used.count(name))
            throw Error(ErrorKind::Config, std::string("slot '") + name +
                                               "' is not used by prompt '" +
                                               to_string(kind) + "'");
    return out;
}

std::map<std::string, std::string> prompt_template_hashes() {
    std::map<std::string, std::string> out;
    for (PromptKind k : {PromptKind::EventChain, PromptKind::FunctionCode,
                         PromptKind::InstanceModel, PromptKind::Constraints})
        out[to_string(k)] = sha256_hex(template_text(k));
    return out;
}

// ---------------------------------------------------------------------------
// Replay backend

ReplayBackend::ReplayBackend(const std::string& fixture_path) {
    *this = from_json(read_file(fixture_path), fixture_path);
}

ReplayBackend ReplayBackend::from_json(const std::string& fixture_json,
                                       const std::string& label) {
    json doc;
    try {
        doc = json::parse(fixture_json);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, "fixture '" + label + "': " + e.what());
    }
    ReplayBackend backend;
    backend.name_ = doc.value("backend", std::string("replay"));
    if (!doc.contains("responses") || !doc["responses"].is_object())
        throw Error(ErrorKind::Schema, "fixture '" + label + "': missing 'responses' map");
    for (const auto& [hash, response] : doc["responses"].items()) {
        if (!response.is_string())
            throw Error(ErrorKind::Schema,
                        "fixture '" + label + "': response for " + hash +
                            " must be a string");
        backend.responses_.emplace(hash, response.get<std::string>());
    }
    return backend;
}

std::string ReplayBackend::complete(const std::string& prompt) {
    std::string hash = sha256_hex(prompt);
    auto it = responses_.find(hash);
    if (it == responses_.end())
        throw Error(ErrorKind::Backend,
                    "replay backend '" + name_ + "': no fixture for prompt hash " + hash);
    return it->second;
}

// ---------------------------------------------------------------------------
// HTTP chat backend (OpenAI-compatible)

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.endpoint_url.empty())
        throw Error(ErrorKind::Config, "http backend: endpoint_url is required");
}

void HttpChatBackend::enable_recording(const std::string& fixture_out_path) {
    record_path_ = fixture_out_path;
}

std::string HttpChatBackend::complete(const std::string& prompt) {
    size_t scheme_end = config_.endpoint_url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorKind::Config, "http backend: endpoint_url needs a scheme");
    std::string scheme = config_.endpoint_url.substr(0, scheme_end);
    if (scheme == "https")
        throw Error(ErrorKind::Backend,
                    "http backend: this build has no TLS support; use an http:// "
                    "endpoint or a local gateway");
    size_t path_start = config_.endpoint_url.find('/', scheme_end + 3);
    std::string host = config_.endpoint_url.substr(
        0, path_start == std::string::npos ? std::string::npos : path_start);
    std::string path = path_start == std::string::npos
                           ? "/"
                           : config_.endpoint_url.substr(path_start);

    json body;
    body["model"] = config_.model;
    body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = config_.temperature;
    body["max_tokens"] = config_.max_tokens;

    httplib::Client client(host);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

    std::string last_failure;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            last_failure = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
            json reply;
            try {
                reply = json::parse(res->body);
            } catch (const json::parse_error& e) {
                throw Error(ErrorKind::Backend,
                            std::string("http backend: unparseable response body: ") +
                                e.what());
            }
            if (!reply.contains("choices") || reply["choices"].empty() ||
                !reply["choices"][0].contains("message"))
                throw Error(ErrorKind::Backend,
                            "http backend: response has no choices[0].message");
            std::string content =
                reply["choices"][0]["message"].value("content", std::string());

            if (!record_path_.empty()) {
                static std::mutex record_mutex;
                std::lock_guard<std::mutex> lock(record_mutex);
                recorded_[sha256_hex(prompt)] = content;
                write_file(record_path_, fixture_to_json(config_.model, recorded_));
            }
            return content;
        } else if (res->status == 429 || res->status >= 500) {
            double wait_s = config_.backoff_base_s * double(1 << (attempt - 1));
            if (res->has_header("Retry-After"))
                wait_s = std::max(wait_s, std::stod(res->get_header_value("Retry-After")));
            last_failure = "status " + std::to_string(res->status) +
                           " (retry-after " + format_double(wait_s) + "s)";
            if (attempt < config_.max_attempts)
                std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
        } else {
            throw Error(ErrorKind::Backend, "http backend: status " +
                                                std::to_string(res->status) + ": " +
                                                res->body);
        }
    }
    throw Error(ErrorKind::Backend, "http backend: gave up after " +
                                        std::to_string(config_.max_attempts) +
                                        " attempts; last failure: " + last_failure);
}

std::string fixture_to_json(const std::string& backend_name,
                            const std::map<std::string, std::string>& by_prompt_hash) {
    ordered_json doc;
    doc["backend"] = backend_name;
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%d", std::gmtime(&now));
    doc["captured"] = buf;
    doc["responses"] = ordered_json::object();
    for (const auto& [hash, response] : by_prompt_hash)
        doc["responses"][hash] = response;
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Artifact extraction

namespace {

struct FencedBlock {
    std::string language;
    std::string content;
};

std::vector<FencedBlock> fenced_blocks(const std::string& text) {
    std::vector<FencedBlock> blocks;
    size_t pos = 0;
    while (true) {
        size_t open = text.find("```", pos);
        if (open == std::string::npos)
            break;
        size_t lang_end = text.find('\n', open + 3);
        if (lang_end == std::string::npos)
            break;
        std::string language = trim(text.substr(open + 3, lang_end - open - 3));
        size_t close = text.find("```", lang_end + 1);
        if (close == std::string::npos)
            break;
        blocks.push_back({language, text.substr(lang_end + 1, close - lang_end - 1)});
        pos = close + 3;
    }
    return blocks;
}

// Outermost balanced {...} or [...] span, honoring strings and escapes.
std::optional<std::string> balanced_bracket_span(const std::string& text) {
    size_t start = text.find_first_of("{[");
    if (start == std::string::npos)
        return std::nullopt;
    char open = text[start];
    char close = open == '{' ? '}' : ']';
    int depth = 0;
    bool in_string = false;
    for (size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (c == '\\')
                ++i;
            else if (c == '"')
                in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (c == open) {
            ++depth;
        } else if (c == close) {
            if (--depth == 0)
                return text.substr(start, i - start + 1);
        }
    }
    return std::nullopt;
}

bool parses_as_json(const std::string& text) {
    return json::accept(text);
}

// Schema validation per kind; throws Error with a descriptive path.
void validate_artifact(ArtifactKind kind, const std::string& candidate) {
    switch (kind) {
    case ArtifactKind::EventChainJson:
        ingest::parse_event_chain(candidate);
        return;
    case ArtifactKind::InstanceModelJson: {
        json doc = json::parse(candidate);
        if (!doc.is_object() || !doc.contains("metamodel") || !doc["metamodel"].is_string())
            throw Error(ErrorKind::Schema, "instance model: missing 'metamodel'");
        if (!doc.contains("objects") || !doc["objects"].is_array())
            throw Error(ErrorKind::Schema, "instance model: missing 'objects' array");
        size_t i = 0;
        for (const auto& jo : doc["objects"]) {
            std::string path = "objects[" + std::to_string(i++) + "]";
            if (!jo.is_object() || !jo.contains("id") || !jo.contains("class"))
                throw Error(ErrorKind::Schema, path + ": needs 'id' and 'class'");
        }
        return;
    }
    case ArtifactKind::ConstraintText:
        ocl::parse_constraints(candidate);
        return;
    case ArtifactKind::CodeText:
        return; // candidate filtering already established class + execute
    }
}

bool looks_like_code(const std::string& content) {
    return content.find("class ") != std::string::npos &&
           content.find("def execute(") != std::string::npos;
}

} // namespace

AgentResult extract_artifact(ArtifactKind kind, const std::string& response) {
    AgentResult result;
    result.raw = response;

    auto blocks = fenced_blocks(response);
    std::vector<const FencedBlock*> candidates;
    for (const auto& b : blocks) {
        switch (kind) {
        case ArtifactKind::EventChainJson:
        case ArtifactKind::InstanceModelJson:
            if (parses_as_json(trim(b.content)))
                candidates.push_back(&b);
            break;
        case ArtifactKind::CodeText:
            if (looks_like_code(b.content))
                candidates.push_back(&b);
            break;
        case ArtifactKind::ConstraintText:
            if (b.content.find("context") != std::string::npos)
                candidates.push_back(&b);
            break;
        }
    }

    if (candidates.size() > 1) {
        result.diagnostic = "ambiguous response: " + std::to_string(candidates.size()) +
                            " fenced blocks match the requested artifact kind";
        return result;
    }

    std::string candidate;
    if (candidates.size() == 1) {
        candidate = candidates.front()->content;
        if (kind != ArtifactKind::CodeText)
            candidate = trim(candidate);
    } else {
        // No fenced candidate; fall back per kind.
        switch (kind) {
        case ArtifactKind::EventChainJson:
        case ArtifactKind::InstanceModelJson: {
            auto span = balanced_bracket_span(response);
            if (!span) {
                result.diagnostic = "no artifact found: no fenced block and no "
                                    "balanced JSON span in the response";
                return result;
            }
            candidate = *span;
            break;
        }
        case ArtifactKind::CodeText:
            result.diagnostic = blocks.empty()
                                    ? "no artifact found: response has no fenced code block"
                                    : "no execute method: fenced code defines no class "
                                      "with an execute() method";
            return result;
        case ArtifactKind::ConstraintText:
            candidate = trim(response);
            if (candidate.empty()) {
                result.diagnostic = "no artifact found: empty response";
                return result;
            }
            break;
        }
    }

    try {
        validate_artifact(kind, candidate);
    } catch (const Error& e) {
        result.diagnostic = std::string("schema-invalid artifact: ") + e.what();
        return result;
    }
    result.artifact = std::move(candidate);
    return result;
}

bool execute_signature_matches(const std::string& code_text,
                               const std::vector<std::string>& input_names,
                               std::string* diagnostic) {
    size_t def = code_text.find("def execute(");
    if (def == std::string::npos) {
        if (diagnostic)
            *diagnostic = "no execute method found";
        return false;
    }
    size_t open = code_text.find('(', def);
    size_t close = code_text.find(')', open);
    if (close == std::string::npos) {
        if (diagnostic)
            *diagnostic = "unterminated execute parameter list";
        return false;
    }
    std::vector<std::string> params;
    for (auto& piece : split(code_text.substr(open + 1, close - open - 1), ',')) {
        std::string p = trim(piece);
        // strip defaults and annotations
        if (auto eq = p.find('='); eq != std::string::npos)
            p = trim(p.substr(0, eq));
        if (auto colon = p.find(':'); colon != std::string::npos)
            p = trim(p.substr(0, colon));
        if (!p.empty())
            params.push_back(p);
    }
    if (params.empty() || params.front() != "self") {
        if (diagnostic)
            *diagnostic = "execute() must be an instance method taking self";
        return false;
    }
    std::set<std::string> got(params.begin() + 1, params.end());
    std::set<std::string> want(input_names.begin(), input_names.end());
    if (got != want) {
        if (diagnostic) {
            std::ostringstream os;
            os << "execute() parameters {";
            for (const auto& p : got)
                os << ' ' << p;
            os << " } do not match declared inputs {";
            for (const auto& w : want)
                os << ' ' << w;
            os << " }";
            *diagnostic = os.str();
        }
        return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Evaluation harness

namespace {

EvalRunOutcome evaluate_single_run(Backend& backend, const EvalConfig& cfg,
                                   const ingest::ComponentRegistry& registry,
                                   const ocl::ConstraintSet& constraints,
                                   const m2t::TemplateAst& manifest_template,
                                   std::shared_ptr<const Metamodel> mm) {
    EvalRunOutcome outcome;

    // Stage 1: event chain description.
    ingest::EventChainDescription desc;
    try {
        std::string prompt = build_prompt(
            PromptKind::EventChain,
            {{"requirements", cfg.requirements_text},
             {"existing_components", cfg.component_registry_json},
             {"existing_signals", cfg.signal_registry_json}});
        AgentResult extraction =
            extract_artifact(ArtifactKind::EventChainJson, backend.complete(prompt));
        if (!extraction.ok()) {
            outcome.note = "event chain: " + extraction.diagnostic;
            return outcome;
        }
        desc = ingest::parse_event_chain(*extraction.artifact);
    } catch (const Error& e) {
        outcome.note = std::string("event chain: ") + e.what();
        return outcome;
    }

    // Stage 2: instance model, conformance, constraint validation.
    std::optional<InstanceModel> model;
    try {
        model = ingest::lower_to_instance(desc, registry, cfg.frequency_policy, mm);
        ocl::ValidationReport report = ocl::evaluate(constraints, *model);
        outcome.model_valid = report.all_passed();
        if (!outcome.model_valid)
            outcome.note = "constraint validation failed";
    } catch (const Error& e) {
        outcome.note = std::string("model: ") + e.what();
    }

    // Stage 3: function code for the not-yet-implemented components. This
    // path only needs the description, so it runs even when the model row
    // above failed.
    ingest::ComponentDiff diff = ingest::diff_components(desc, registry);
    bool code_ok = true;
    for (const auto& name : diff.to_generate) {
        const ingest::ComponentDesc* comp = nullptr;
        for (const auto& c : desc.components)
            if (c.name == name)
                comp = &c;
        try {
            std::string prompt = build_prompt(
                PromptKind::FunctionCode,
                {{"submodule_description", ingest::component_to_json(*comp)}});
            AgentResult extraction =
                extract_artifact(ArtifactKind::CodeText, backend.complete(prompt));
            if (!extraction.ok()) {
                code_ok = false;
                outcome.note += (outcome.note.empty() ? "" : "; ") + name + ": " +
                                extraction.diagnostic;
                continue;
            }
            std::vector<std::string> input_names;
            for (const auto& port : comp->inputs)
                for (const auto& value : port.values)
                    input_names.push_back(value.name);
            std::string diag;
            if (!execute_signature_matches(*extraction.artifact, input_names, &diag)) {
                code_ok = false;
                outcome.note += (outcome.note.empty() ? "" : "; ") + name + ": " + diag;
            }
        } catch (const Error& e) {
            code_ok = false;
            outcome.note += (outcome.note.empty() ? "" : "; ") + name + ": " + e.what();
        }
    }
    outcome.code_valid = code_ok;

    // Stage 4: scenario execution, only meaningful when both artifacts hold.
    if (outcome.model_valid && outcome.code_valid) {
        try {
            m2t::GeneratedFileSet files = m2t::render(manifest_template, *model);
            if (files.files.size() != 1)
                throw Error(ErrorKind::Contract, "manifest template produced " +
                                                     std::to_string(files.files.size()) +
                                                     " files");
            sim::NodeGraph graph = sim::load_wiring(files.files.front().content);
            sim::ScenarioTrace trace =
                sim::run_scenario(graph, *cfg.behaviors, cfg.scenario);
            outcome.scenario_passed = sim::scenario_passed(trace);
            if (!outcome.scenario_passed)
                outcome.note += (outcome.note.empty() ? "" : "; ") +
                                std::string("scenario failed: ") +
                                (trace.collided() ? "collision" : "did not stop");
        } catch (const Error& e) {
            outcome.note += (outcome.note.empty() ? "" : "; ") +
                            std::string("scenario: ") + e.what();
        }
    }

    outcome.overall = outcome.model_valid && outcome.code_valid && outcome.scenario_passed;
    return outcome;
}

} // namespace

EvalReport run_evaluation(const EvalConfig& cfg) {
    if (cfg.runs < 1)
        throw Error(ErrorKind::Config, "evaluation needs at least one run");
    if (cfg.backends.empty())
        throw Error(ErrorKind::Config, "evaluation needs at least one backend");
    if (!cfg.behaviors)
        throw Error(ErrorKind::Config, "evaluation needs a behavior registry");

    auto mm = cfg.metamodel ? cfg.metamodel : evchain::builtin::event_chain_metamodel();
    ocl::ConstraintSet constraints = ocl::parse_constraints(
        cfg.constraints_text.empty() ? evchain::builtin::design_constraints_text()
                                     : cfg.constraints_text);
    m2t::TemplateAst manifest_template = m2t::parse_template(
        cfg.manifest_template_text.empty() ? m2t::builtin::wiring_manifest_template()
                                           : cfg.manifest_template_text);
    ingest::ComponentRegistry registry =
        ingest::parse_component_registry(cfg.component_registry_json);

    EvalReport report;
    for (const auto& spec : cfg.backends) {
        EvalBackendReport br;
        br.backend = spec.name;
        br.runs = cfg.runs;
        if (spec.fixture_paths.empty() && !spec.http)
            throw Error(ErrorKind::Config,
                        "backend '" + spec.name + "' has neither fixtures nor an "
                        "http configuration");
        std::unique_ptr<Backend> live;
        if (spec.http)
            live = std::make_unique<HttpChatBackend>(*spec.http);
        for (int run = 0; run < cfg.runs; ++run) {
            EvalRunOutcome outcome;
            try {
                if (live) {
                    outcome = evaluate_single_run(*live, cfg, registry, constraints,
                                                  manifest_template, mm);
                } else {
                    size_t idx =
                        std::min(static_cast<size_t>(run), spec.fixture_paths.size() - 1);
                    ReplayBackend backend(spec.fixture_paths[idx]);
                    outcome = evaluate_single_run(backend, cfg, registry, constraints,
                                                  manifest_template, mm);
                }
            } catch (const Error& e) {
                outcome.note = e.what();
            }
            br.model_valid += outcome.model_valid ? 1 : 0;
            br.code_valid += outcome.code_valid ? 1 : 0;
            br.overall += outcome.overall ? 1 : 0;
            br.outcomes.push_back(std::move(outcome));
        }
        report.backends.push_back(std::move(br));
    }
    return report;
}

std::string eval_report_to_json(const EvalReport& report) {
    ordered_json doc;
    doc["backends"] = ordered_json::array();
    for (const auto& b : report.backends) {
        ordered_json jb;
        jb["backend"] = b.backend;
        jb["runs"] = b.runs;
        jb["eventchain_model_valid"] = b.model_valid;
        jb["function_code_valid"] = b.code_valid;
        jb["overall_success"] = b.overall;
        jb["eventchain_model_rate"] = b.model_valid_rate();
        jb["function_code_rate"] = b.code_valid_rate();
        jb["overall_rate"] = b.overall_rate();
        jb["runs_detail"] = ordered_json::array();
        for (const auto& o : b.outcomes) {
            ordered_json jo;
            jo["model_valid"] = o.model_valid;
            jo["code_valid"] = o.code_valid;
            jo["scenario_passed"] = o.scenario_passed;
            jo["overall"] = o.overall;
            jo["note"] = o.note;
            jb["runs_detail"].push_back(std::move(jo));
        }
        doc["backends"].push_back(std::move(jb));
    }
    return doc.dump(2) + "\n";
}

std::string eval_report_to_table(const EvalReport& report) {
    auto percent = [](double rate) {
        std::ostringstream os;
        os << static_cast<int>(rate * 100.0 + 0.5) << "%";
        return os.str();
    };
    std::ostringstream out;
    out << "backend                | eventchain model | function code | overall success\n"
        << "-----------------------+------------------+---------------+----------------\n";
    for (const auto& b : report.backends) {
        std::string name = b.backend;
        if (name.size() < 22)
            name.append(22 - name.size(), ' ');
        auto cell = [&](int count, double rate, size_t width) {
            std::string s = percent(rate) + " (" + std::to_string(count) + "/" +
                            std::to_string(b.runs) + ")";
            if (s.size() < width)
                s.append(width - s.size(), ' ');
            return s;
        };
        out << name << " | " << cell(b.model_valid, b.model_valid_rate(), 16) << " | "
            << cell(b.code_valid, b.code_valid_rate(), 13) << " | "
            << cell(b.overall, b.overall_rate(), 15) << '\n';
    }
    return out.str();
}

namespace builtin {

const std::string& instance_model_one_shot() {
    static const std::string text = R"ev(## Example event chain description
[{
 "name": "SpeedSensor",
 "description": "Reads the raw wheel speed and publishes a filtered speed value.",
 "input": [
 {
  "topic": "/raw/wheel_speed",
  "message_type": "std_msgs/Float32",
  "qos_profile": "default",
  "values": [
  {
   "name": "raw_speed",
   "field": "data",
   "description": "Unfiltered wheel speed (m/s)"
  }]
 }],
 "output": [
 {
  "topic": "/speed",
  "message_type": "std_msgs/Float32",
  "qos_profile": "default",
  "values": [
  {
   "name": "speed",
   "field": "data",
   "description": "Filtered vehicle speed (m/s)"
  }]
 }]
},
{
 "name": "SpeedDisplay",
 "description": "Shows the current speed on the instrument cluster.",
 "input": [
 {
  "topic": "/speed",
  "message_type": "std_msgs/Float32",
  "qos_profile": "default",
  "values": [
  {
   "name": "speed",
   "field": "data",
   "description": "Filtered vehicle speed (m/s)"
  }]
 }],
 "output": [
 {
  "topic": "/display/speed",
  "message_type": "std_msgs/Float32",
  "qos_profile": "default",
  "values": [
  {
   "name": "shown_speed",
   "field": "data",
   "description": "Speed value shown to the driver (m/s)"
  }]
 }]
}]

## Expected instance model
{
  "metamodel": "eventchain",
  "objects": [
    {
      "id": "eventchain",
      "class": "EventChain",
      "attributes": {"name": "eventchain"},
      "references": {"software": ["SpeedSensor", "SpeedDisplay"]}
    },
    {
      "id": "SpeedSensor",
      "class": "SoftwareNode",
      "attributes": {"name": "SpeedSensor", "frequency": 20.0, "existing": false},
      "references": {
        "input": ["raw_wheel_speed__data"],
        "output": ["speed__data"],
        "nextstep": ["SpeedDisplay"]
      }
    },
    {
      "id": "SpeedDisplay",
      "class": "SoftwareNode",
      "attributes": {"name": "SpeedDisplay", "frequency": 20.0, "existing": false},
      "references": {
        "input": ["speed__data"],
        "output": ["display_speed__data"]
      }
    },
    {
      "id": "raw_wheel_speed__data",
      "class": "Data",
      "attributes": {
        "name": "raw_speed",
        "topicName": "/raw/wheel_speed",
        "messageType": "std_msgs/Float32",
        "fieldName": "data",
        "qosProfile": "default",
        "description": "Unfiltered wheel speed (m/s)"
      },
      "references": {}
    },
    {
      "id": "speed__data",
      "class": "Data",
      "attributes": {
        "name": "speed",
        "topicName": "/speed",
        "messageType": "std_msgs/Float32",
        "fieldName": "data",
        "qosProfile": "default",
        "description": "Filtered vehicle speed (m/s)"
      },
      "references": {}
    },
    {
      "id": "display_speed__data",
      "class": "Data",
      "attributes": {
        "name": "shown_speed",
        "topicName": "/display/speed",
        "messageType": "std_msgs/Float32",
        "fieldName": "data",
        "qosProfile": "default",
        "description": "Speed value shown to the driver (m/s)"
      },
      "references": {}
    }
  ]
}
)ev";
    return text;
}

} // namespace builtin

} // namespace evchain::llm
