#pragma once

#include "evchain/model.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace evchain::ingest {

// Event-chain descriptions arrive as an ordered JSON list of components;
// the order IS the software sequence in the chain.

struct PortValue {
    std::string name;        // value name used in generated code
    std::string field;       // message field carrying it
    std::string description;
};

struct PortDesc {
    std::string topic;        // "/some/topic"
    std::string message_type; // "pkg/Type", exactly one '/'
    std::string qos_profile;
    std::vector<PortValue> values;
};

struct ComponentDesc {
    std::string name;
    std::string description;
    std::vector<PortDesc> inputs;
    std::vector<PortDesc> outputs;
};

struct EventChainDescription {
    std::vector<ComponentDesc> components;
};

struct SignalField {
    std::string field;
    std::string type;
    std::string description;
};

struct SignalEntry {
    std::string topic;
    std::string message_type;
    std::string qos_profile;
    std::vector<SignalField> fields;
};

struct SignalRegistry {
    std::vector<SignalEntry> entries;
};

struct ComponentRegistry {
    std::vector<ComponentDesc> components;

    const ComponentDesc* find(const std::string& name) const;
};

// Schema errors name the offending path, e.g. components[1].input[0].topic.
EventChainDescription parse_event_chain(const std::string& document);
ComponentRegistry parse_component_registry(const std::string& document);
SignalRegistry parse_signal_registry(const std::string& document);

std::string component_registry_to_json(const ComponentRegistry& reg);
std::string signal_registry_to_json(const SignalRegistry& reg);
std::string component_to_json(const ComponentDesc& comp);

struct ComponentDiff {
    std::vector<std::string> existing;
    std::vector<std::string> to_generate;
};

// Partitions component names by exact, case-sensitive match against the
// registry; input order is preserved in both halves.
ComponentDiff diff_components(const EventChainDescription& desc,
                              const ComponentRegistry& reg);

// The description format carries no execution frequency, the metamodel
// needs one: per-node overrides, falling back to a default. A node with no
// override and no default is an error.
struct FrequencyPolicy {
    std::map<std::string, double> overrides;
    std::optional<double> default_hz = 20.0;

    double resolve(const std::string& node_name) const;
};

// Deterministic lowering: one SoftwareNode per component, one Data object
// per distinct (topic, field) pair, nextstep chaining consecutive
// components. The result conforms to the event-chain metamodel.
InstanceModel lower_to_instance(const EventChainDescription& desc,
                                const ComponentRegistry& reg,
                                const FrequencyPolicy& freq,
                                std::shared_ptr<const Metamodel> mm);

} // namespace evchain::ingest
