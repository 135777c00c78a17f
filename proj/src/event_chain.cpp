#include "evchain/event_chain.hpp"

#include "evchain/model_io.hpp"
#include "evchain/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace evchain::ingest {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

json parse_json(const std::string& document, const char* what) {
    try {
        return json::parse(document);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, std::string(what) + ": " + e.what());
    }
}

std::string path_string(const json& v, const std::string& path) {
    if (!v.is_string())
        throw Error(ErrorKind::Schema, path + " must be a string");
    return v.get<std::string>();
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw Error(ErrorKind::Schema, path + "." + key + " missing");
    return path_string(*it, path + "." + key);
}

PortDesc parse_port(const json& jp, const std::string& path) {
    if (!jp.is_object())
        throw Error(ErrorKind::Schema, path + " must be an object");
    PortDesc port;
    port.topic = require_string(jp, "topic", path);
    port.message_type = require_string(jp, "message_type", path);
    port.qos_profile = require_string(jp, "qos_profile", path);
    if (std::count(port.message_type.begin(), port.message_type.end(), '/') != 1)
        throw Error(ErrorKind::Schema,
                    path + ".message_type '" + port.message_type +
                        "' must contain exactly one '/'");
    auto it = jp.find("values");
    if (it == jp.end() || !it->is_array())
        throw Error(ErrorKind::Schema, path + ".values missing or not an array");
    size_t i = 0;
    for (const auto& jv : *it) {
        std::string vpath = path + ".values[" + std::to_string(i++) + "]";
        PortValue value;
        value.name = require_string(jv, "name", vpath);
        value.field = require_string(jv, "field", vpath);
        if (auto d = jv.find("description"); d != jv.end())
            value.description = path_string(*d, vpath + ".description");
        port.values.push_back(std::move(value));
    }
    return port;
}

ComponentDesc parse_component(const json& jc, const std::string& path) {
    if (!jc.is_object())
        throw Error(ErrorKind::Schema, path + " must be an object");
    ComponentDesc comp;
    comp.name = require_string(jc, "name", path);
    if (auto d = jc.find("description"); d != jc.end())
        comp.description = path_string(*d, path + ".description");
    for (const char* side : {"input", "output"}) {
        auto it = jc.find(side);
        if (it == jc.end())
            continue; // a component may omit a side entirely
        if (!it->is_array())
            throw Error(ErrorKind::Schema, path + "." + side + " must be an array");
        size_t i = 0;
        for (const auto& jp : *it) {
            std::string ppath = path + "." + side + "[" + std::to_string(i++) + "]";
            (side[0] == 'i' ? comp.inputs : comp.outputs).push_back(parse_port(jp, ppath));
        }
    }
    return comp;
}

std::vector<ComponentDesc> parse_component_list(const std::string& document,
                                                const std::string& root) {
    json doc = parse_json(document, root.c_str());
    if (!doc.is_array())
        throw Error(ErrorKind::Schema, root + " must be a JSON array");
    std::vector<ComponentDesc> out;
    std::set<std::string> names;
    size_t i = 0;
    for (const auto& jc : doc) {
        std::string path = root + "[" + std::to_string(i++) + "]";
        ComponentDesc comp = parse_component(jc, path);
        if (!names.insert(comp.name).second)
            throw Error(ErrorKind::Schema,
                        path + ": duplicate component name '" + comp.name + "'");
        out.push_back(std::move(comp));
    }
    return out;
}

ordered_json port_to_json(const PortDesc& p) {
    ordered_json jp;
    jp["topic"] = p.topic;
    jp["message_type"] = p.message_type;
    jp["qos_profile"] = p.qos_profile;
    jp["values"] = ordered_json::array();
    for (const auto& v : p.values) {
        ordered_json jv;
        jv["name"] = v.name;
        jv["field"] = v.field;
        jv["description"] = v.description;
        jp["values"].push_back(std::move(jv));
    }
    return jp;
}

} // namespace

const ComponentDesc* ComponentRegistry::find(const std::string& name) const {
    for (const auto& c : components)
        if (c.name == name)
            return &c;
    return nullptr;
}

EventChainDescription parse_event_chain(const std::string& document) {
    return EventChainDescription{parse_component_list(document, "components")};
}

ComponentRegistry parse_component_registry(const std::string& document) {
    return ComponentRegistry{parse_component_list(document, "registry")};
}

SignalRegistry parse_signal_registry(const std::string& document) {
    json doc = parse_json(document, "signals");
    if (!doc.is_array())
        throw Error(ErrorKind::Schema, "signals must be a JSON array");
    SignalRegistry reg;
    std::set<std::string> topics;
    size_t i = 0;
    for (const auto& je : doc) {
        std::string path = "signals[" + std::to_string(i++) + "]";
        SignalEntry entry;
        entry.topic = require_string(je, "Topic Name", path);
        entry.message_type = require_string(je, "Message Type", path);
        entry.qos_profile = require_string(je, "qos_profile", path);
        if (!topics.insert(entry.topic).second)
            throw Error(ErrorKind::Schema,
                        path + ": duplicate topic '" + entry.topic + "'");
        if (auto it = je.find("Message Definition"); it != je.end()) {
            if (!it->is_array())
                throw Error(ErrorKind::Schema,
                            path + ".Message Definition must be an array");
            size_t k = 0;
            for (const auto& jf : *it) {
                std::string fpath = path + ".Message Definition[" + std::to_string(k++) + "]";
                SignalField field;
                field.field = require_string(jf, "Field", fpath);
                field.type = require_string(jf, "Type", fpath);
                if (auto d = jf.find("Description"); d != jf.end())
                    field.description = path_string(*d, fpath + ".Description");
                entry.fields.push_back(std::move(field));
            }
        }
        reg.entries.push_back(std::move(entry));
    }
    return reg;
}

namespace {

ordered_json component_to_ordered_json(const ComponentDesc& c) {
    ordered_json jc;
    jc["name"] = c.name;
    jc["description"] = c.description;
    jc["input"] = ordered_json::array();
    for (const auto& p : c.inputs)
        jc["input"].push_back(port_to_json(p));
    jc["output"] = ordered_json::array();
    for (const auto& p : c.outputs)
        jc["output"].push_back(port_to_json(p));
    return jc;
}

} // namespace

std::string component_registry_to_json(const ComponentRegistry& reg) {
    ordered_json doc = ordered_json::array();
    for (const auto& c : reg.components)
        doc.push_back(component_to_ordered_json(c));
    return doc.dump(1);
}

std::string component_to_json(const ComponentDesc& comp) {
    return component_to_ordered_json(comp).dump(1);
}

std::string signal_registry_to_json(const SignalRegistry& reg) {
    ordered_json doc = ordered_json::array();
    for (const auto& e : reg.entries) {
        ordered_json je;
        je["Topic Name"] = e.topic;
        je["Message Type"] = e.message_type;
        je["qos_profile"] = e.qos_profile;
        je["Message Definition"] = ordered_json::array();
        for (const auto& f : e.fields) {
            ordered_json jf;
            jf["Field"] = f.field;
            jf["Type"] = f.type;
            jf["Description"] = f.description;
            je["Message Definition"].push_back(std::move(jf));
        }
        doc.push_back(std::move(je));
    }
    return doc.dump(1);
}

ComponentDiff diff_components(const EventChainDescription& desc,
                              const ComponentRegistry& reg) {
    ComponentDiff diff;
    for (const auto& comp : desc.components) {
        if (reg.find(comp.name))
            diff.existing.push_back(comp.name);
        else
            diff.to_generate.push_back(comp.name);
    }
    return diff;
}

double FrequencyPolicy::resolve(const std::string& node_name) const {
    if (auto it = overrides.find(node_name); it != overrides.end())
        return it->second;
    if (default_hz)
        return *default_hz;
    throw Error(ErrorKind::Config,
                "no frequency resolvable for node '" + node_name + "'");
}

InstanceModel lower_to_instance(const EventChainDescription& desc,
                                const ComponentRegistry& reg,
                                const FrequencyPolicy& freq,
                                std::shared_ptr<const Metamodel> mm) {
    if (!mm || !mm->find_class("EventChain") || !mm->find_class("SoftwareNode") ||
        !mm->find_class("Data"))
        throw Error(ErrorKind::Config,
                    "lower_to_instance requires the event-chain metamodel");

    ComponentDiff diff = diff_components(desc, reg);
    std::set<std::string> existing(diff.existing.begin(), diff.existing.end());

    std::vector<ModelObject> objects;
    ModelObject root;
    root.id = "eventchain";
    root.class_name = "EventChain";
    root.attributes.emplace("name", std::string("eventchain"));

    // Shared signals: one Data object per distinct (topic, field) pair.
    // First occurrence fixes name/messageType/description; a conflicting
    // qos_profile on the same pair is an error.
    std::map<std::pair<std::string, std::string>, size_t> data_index;
    std::vector<ModelObject> data_objects;

    auto intern_data = [&](const PortDesc& port, const PortValue& value) -> std::string {
        auto key = std::make_pair(port.topic, value.field);
        if (auto it = data_index.find(key); it != data_index.end()) {
            const ModelObject& d = data_objects[it->second];
            const auto& qos = std::get<std::string>(d.attributes.at("qosProfile"));
            if (qos != port.qos_profile)
                throw Error(ErrorKind::Schema,
                            "signal (" + port.topic + ", " + value.field +
                                ") declared with conflicting qos_profile '" + qos +
                                "' vs '" + port.qos_profile + "'");
            return d.id;
        }
        std::string id = sanitize_identifier(port.topic) + "__" + value.field;
        ModelObject data;
        data.id = id;
        data.class_name = "Data";
        data.attributes.emplace("name", value.name);
        data.attributes.emplace("topicName", port.topic);
        data.attributes.emplace("messageType", port.message_type);
        data.attributes.emplace("fieldName", value.field);
        data.attributes.emplace("qosProfile", port.qos_profile);
        if (!value.description.empty())
            data.attributes.emplace("description", value.description);
        data_index.emplace(std::move(key), data_objects.size());
        data_objects.push_back(std::move(data));
        return id;
    };

    std::vector<ModelObject> nodes;
    std::vector<std::string> node_ids;
    for (const auto& comp : desc.components) {
        ModelObject node;
        node.id = comp.name;
        node.class_name = "SoftwareNode";
        node.attributes.emplace("name", comp.name);
        double hz = freq.resolve(comp.name);
        if (hz <= 0.0)
            throw Error(ErrorKind::Config,
                        "frequency for node '" + comp.name + "' must be > 0");
        node.attributes.emplace("frequency", hz);
        node.attributes.emplace("existing", existing.count(comp.name) > 0);

        std::vector<std::string> input_ids, output_ids;
        for (const auto& port : comp.inputs)
            for (const auto& value : port.values)
                input_ids.push_back(intern_data(port, value));
        for (const auto& port : comp.outputs)
            for (const auto& value : port.values)
                output_ids.push_back(intern_data(port, value));
        if (!input_ids.empty())
            node.references.emplace("input", std::move(input_ids));
        if (!output_ids.empty())
            node.references.emplace("output", std::move(output_ids));

        node_ids.push_back(node.id);
        nodes.push_back(std::move(node));
    }

    for (size_t i = 0; i + 1 < nodes.size(); ++i)
        nodes[i].references.emplace("nextstep", std::vector<std::string>{node_ids[i + 1]});

    if (!node_ids.empty())
        root.references.emplace("software", node_ids);

    objects.push_back(std::move(root));
    for (auto& n : nodes)
        objects.push_back(std::move(n));
    for (auto& d : data_objects)
        objects.push_back(std::move(d));

    std::string mm_name = mm->name;
    InstanceModel m(std::move(mm_name), std::move(mm), std::move(objects));
    check_conformance(m);
    return m;
}

} // namespace evchain::ingest
