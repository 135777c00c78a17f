#include "evchain/model.hpp"

#include "evchain/model_io.hpp"
#include "evchain/text.hpp"

#include <algorithm>

namespace evchain {

const char* to_string(PrimitiveType t) {
    switch (t) {
    case PrimitiveType::String: return "string";
    case PrimitiveType::Float: return "float";
    case PrimitiveType::Int: return "int";
    case PrimitiveType::Bool: return "bool";
    }
    return "?";
}

const char* to_string(Multiplicity m) {
    switch (m) {
    case Multiplicity::ZeroOrOne: return "0..1";
    case Multiplicity::One: return "1..1";
    case Multiplicity::Any: return "0..*";
    case Multiplicity::AtLeastOne: return "1..*";
    }
    return "?";
}

PrimitiveType primitive_type_from_string(const std::string& s) {
    if (s == "string") return PrimitiveType::String;
    if (s == "float") return PrimitiveType::Float;
    if (s == "int") return PrimitiveType::Int;
    if (s == "bool") return PrimitiveType::Bool;
    throw Error(ErrorKind::Schema, "unknown primitive type '" + s + "'");
}

Multiplicity multiplicity_from_string(const std::string& s) {
    if (s == "0..1") return Multiplicity::ZeroOrOne;
    if (s == "1..1") return Multiplicity::One;
    if (s == "0..*") return Multiplicity::Any;
    if (s == "1..*") return Multiplicity::AtLeastOne;
    throw Error(ErrorKind::Schema, "unknown multiplicity '" + s + "'");
}

const AttributeDef* MetaClass::find_attribute(const std::string& n) const {
    for (const auto& a : attributes)
        if (a.name == n)
            return &a;
    return nullptr;
}

const ReferenceDef* MetaClass::find_reference(const std::string& n) const {
    for (const auto& r : references)
        if (r.name == n)
            return &r;
    return nullptr;
}

const MetaClass* Metamodel::find_class(const std::string& n) const {
    for (const auto& c : classes)
        if (c.name == n)
            return &c;
    return nullptr;
}

bool value_matches_type(const Value& v, PrimitiveType t) {
    switch (t) {
    case PrimitiveType::String: return std::holds_alternative<std::string>(v);
    case PrimitiveType::Float: return std::holds_alternative<double>(v);
    case PrimitiveType::Int: return std::holds_alternative<int64_t>(v);
    case PrimitiveType::Bool: return std::holds_alternative<bool>(v);
    }
    return false;
}

std::string value_to_display(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
    if (const auto* i = std::get_if<int64_t>(&v)) return std::to_string(*i);
    return std::get<bool>(v) ? "true" : "false";
}

InstanceModel::InstanceModel(std::string metamodel_name,
                             std::shared_ptr<const Metamodel> mm,
                             std::vector<ModelObject> objects)
    : metamodel_name_(std::move(metamodel_name)), metamodel_(std::move(mm)),
      objects_(std::move(objects)) {
    for (size_t i = 0; i < objects_.size(); ++i)
        index_.emplace(objects_[i].id, i);
}

const Metamodel& InstanceModel::metamodel() const {
    if (!metamodel_)
        throw Error(ErrorKind::Config, "instance model has no metamodel attached");
    return *metamodel_;
}

const ModelObject* InstanceModel::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &objects_[it->second];
}

const ModelObject& InstanceModel::resolve(const std::string& id) const {
    const ModelObject* obj = find(id);
    if (!obj)
        throw Error(ErrorKind::Conformance, "unresolved object id '" + id + "'");
    return *obj;
}

const MetaClass& InstanceModel::class_of(const ModelObject& obj) const {
    const MetaClass* mc = metamodel().find_class(obj.class_name);
    if (!mc)
        throw Error(ErrorKind::Conformance,
                    "object '" + obj.id + "' has unknown class '" + obj.class_name + "'");
    return *mc;
}

std::vector<const ModelObject*> InstanceModel::objects_of_class(
    const std::string& class_name) const {
    std::vector<const ModelObject*> out;
    for (const auto& o : objects_)
        if (o.class_name == class_name)
            out.push_back(&o);
    return out;
}

bool InstanceModel::structurally_equal(const InstanceModel& other) const {
    if (metamodel_name_ != other.metamodel_name_) return false;
    if (objects_.size() != other.objects_.size()) return false;
    for (const auto& o : objects_) {
        const ModelObject* oo = other.find(o.id);
        if (!oo || !(*oo == o))
            return false;
    }
    return true;
}

NavigationResult navigate(const InstanceModel& m, const ModelObject& obj,
                          const std::string& feature) {
    const MetaClass& mc = m.class_of(obj);
    if (const AttributeDef* ad = mc.find_attribute(feature)) {
        auto it = obj.attributes.find(feature);
        if (it == obj.attributes.end())
            throw Error(ErrorKind::Eval, "attribute '" + feature + "' is not set on object '" +
                                             obj.id + "'");
        (void)ad;
        return it->second;
    }
    if (mc.find_reference(feature)) {
        std::vector<const ModelObject*> out;
        auto it = obj.references.find(feature);
        if (it != obj.references.end()) {
            out.reserve(it->second.size());
            for (const auto& id : it->second)
                out.push_back(&m.resolve(id));
        }
        return out;
    }
    throw Error(ErrorKind::UnknownFeature, "class '" + mc.name + "' has no feature '" +
                                               feature + "'");
}

namespace builtin {

const std::string& event_chain_metamodel_json() {
    static const std::string text = R"({
  "name": "eventchain",
  "classes": [
    {
      "name": "EventChain",
      "attributes": [
        {"name": "name", "type": "string"}
      ],
      "references": [
        {"name": "software", "target": "SoftwareNode", "multiplicity": "0..*", "containment": true}
      ]
    },
    {
      "name": "SoftwareNode",
      "attributes": [
        {"name": "name", "type": "string"},
        {"name": "frequency", "type": "float"},
        {"name": "existing", "type": "bool"}
      ],
      "references": [
        {"name": "input", "target": "Data", "multiplicity": "0..*", "containment": false},
        {"name": "output", "target": "Data", "multiplicity": "0..*", "containment": false},
        {"name": "nextstep", "target": "SoftwareNode", "multiplicity": "0..1", "containment": false}
      ]
    },
    {
      "name": "Data",
      "attributes": [
        {"name": "name", "type": "string"},
        {"name": "topicName", "type": "string"},
        {"name": "messageType", "type": "string"},
        {"name": "fieldName", "type": "string"},
        {"name": "qosProfile", "type": "string"},
        {"name": "description", "type": "string"}
      ],
      "references": []
    }
  ]
}
)";
    return text;
}

std::shared_ptr<const Metamodel> event_chain_metamodel() {
    static const std::shared_ptr<const Metamodel> mm = [] {
        return std::make_shared<const Metamodel>(load_metamodel(event_chain_metamodel_json()));
    }();
    return mm;
}

const std::string& design_constraints_text() {
    static const std::string text =
        "context SoftwareNode\n"
        "  inv HasInputAndOutputData:\n"
        "    self.input->notEmpty() and self.output->notEmpty()\n"
        "  inv NextstepFrequencyEqualOrHigher:\n"
        "    self.nextstep->notEmpty() implies (self.nextstep.frequency >= self.frequency)\n";
    return text;
}

} // namespace builtin

} // namespace evchain
