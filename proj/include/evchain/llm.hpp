#pragma once

#include "evchain/error.hpp"
#include "evchain/event_chain.hpp"
#include "evchain/model.hpp"
#include "evchain/sim.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace evchain::llm {

// Prompt construction, pluggable chat backends (HTTP or deterministic
// replay), artifact extraction from responses, and the N-run evaluation
// harness.

enum class PromptKind { EventChain, FunctionCode, InstanceModel, Constraints };

const char* to_string(PromptKind k);

// Slot names a template may reference, wrapped as {{name}} in the text.
// build_prompt substitutes every slot; a referenced slot with no value is
// an error, as is a provided slot the template never mentions.
using SlotMap = std::map<std::string, std::string>;

std::string prompt_template(PromptKind kind);
std::string build_prompt(PromptKind kind, const SlotMap& slots);

// SHA-256 of each shipped template; the templates are frozen surface and a
// checksum test keeps them that way.
std::map<std::string, std::string> prompt_template_hashes();

// ---------------------------------------------------------------------------
// Backends

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string name() const = 0;
    virtual std::string complete(const std::string& prompt) = 0;
};

// Replay fixtures: {"backend": ..., "captured": ..., "responses":
// {sha256(prompt): response}}. Total over its fixture set; an unknown
// prompt hash is an error, never a silent fallback.
class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(const std::string& fixture_path);
    static ReplayBackend from_json(const std::string& fixture_json,
                                   const std::string& label);

    std::string name() const override { return name_; }
    std::string complete(const std::string& prompt) override;

private:
    ReplayBackend() = default;
    std::string name_;
    std::map<std::string, std::string> responses_;
};

struct HttpBackendConfig {
    std::string endpoint_url; // e.g. https://host/v1/chat/completions
    std::string model;
    std::string api_key_env = "LLM_API_KEY";
    double temperature = 0.2;
    int max_tokens = 4096;
    int max_attempts = 3; // bounded exponential backoff on 429/5xx
    double backoff_base_s = 0.5;
};

// OpenAI-compatible chat-completion client. Optionally records every
// (prompt, response) pair for later replay.
class HttpChatBackend : public Backend {
public:
    explicit HttpChatBackend(HttpBackendConfig config);

    std::string name() const override { return config_.model; }
    std::string complete(const std::string& prompt) override;

    void enable_recording(const std::string& fixture_out_path);

private:
    HttpBackendConfig config_;
    std::string record_path_;
    std::map<std::string, std::string> recorded_;
};

// Builds the fixture-file JSON for a set of prompt->response pairs.
std::string fixture_to_json(const std::string& backend_name,
                            const std::map<std::string, std::string>& by_prompt_hash);

// ---------------------------------------------------------------------------
// Artifact extraction

enum class ArtifactKind { EventChainJson, InstanceModelJson, CodeText, ConstraintText };

struct AgentResult {
    std::string raw;
    std::optional<std::string> artifact;
    std::string diagnostic; // set when artifact is absent

    bool ok() const { return artifact.has_value(); }
};

// JSON kinds: first fenced code block when present, otherwise the outermost
// balanced bracket span; the candidate must pass schema validation. Code:
// first fenced block containing a class with an execute method. Two fenced
// candidates of the target kind is an explicit ambiguity diagnostic.
AgentResult extract_artifact(ArtifactKind kind, const std::string& response);

// Checks a generated component class: execute(self, ...) parameters must
// match the declared input names exactly (order-insensitive).
bool execute_signature_matches(const std::string& code_text,
                               const std::vector<std::string>& input_names,
                               std::string* diagnostic = nullptr);

// ---------------------------------------------------------------------------
// Evaluation harness

struct EvalBackendSpec {
    std::string name;
    // Replay: one fixture per run; run i uses fixture min(i, size-1), so a
    // single fixture replays identically for every run.
    std::vector<std::string> fixture_paths;
    // Live alternative: when set, every run calls this HTTP backend.
    std::optional<HttpBackendConfig> http;
};

struct EvalRunOutcome {
    bool model_valid = false;
    bool code_valid = false;
    bool scenario_passed = false;
    bool overall = false;
    std::string note;
};

struct EvalBackendReport {
    std::string backend;
    int runs = 0;
    int model_valid = 0;
    int code_valid = 0;
    int overall = 0;
    std::vector<EvalRunOutcome> outcomes;

    double model_valid_rate() const { return runs ? double(model_valid) / runs : 0.0; }
    double code_valid_rate() const { return runs ? double(code_valid) / runs : 0.0; }
    double overall_rate() const { return runs ? double(overall) / runs : 0.0; }
};

struct EvalReport {
    std::vector<EvalBackendReport> backends;
};

// Full development-run measurement: per run, an event chain is generated
// and modeled (model-valid when it parses, conforms and passes the shipped
// constraints), function code is generated for the missing components
// (code-valid when extraction succeeds and every execute signature matches
// its declared inputs), and the braking scenario is executed with the
// configured behaviors. Overall success needs all three. Backend errors
// score as failed runs; the report always completes.
struct EvalConfig {
    std::vector<EvalBackendSpec> backends;
    int runs = 5;

    std::string requirements_text;
    std::string component_registry_json;
    std::string signal_registry_json;
    ingest::FrequencyPolicy frequency_policy;
    std::shared_ptr<const Metamodel> metamodel; // empty = built-in
    std::string constraints_text;               // empty = built-in
    std::string manifest_template_text;         // empty = built-in

    const sim::BehaviorRegistry* behaviors = nullptr;
    sim::AebScenario scenario;
};

EvalReport run_evaluation(const EvalConfig& config);

std::string eval_report_to_json(const EvalReport& report);
std::string eval_report_to_table(const EvalReport& report);

namespace builtin {

// One-shot example for the instance-model prompt: a two-component toy
// chain with its expected instance model.
const std::string& instance_model_one_shot();

} // namespace builtin

} // namespace evchain::llm
