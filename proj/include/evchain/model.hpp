#pragma once

#include "evchain/error.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace evchain {

// Metamodel / instance-model facility. A Metamodel plays the schema role:
// flat classes with typed attributes and multiplicity-bounded references.
// An InstanceModel is a typed object graph conforming to one. Everything
// here is treated as immutable once loaded or lowered; validation lives in
// model_io, navigation below is the primitive shared by the constraint and
// template engines.

enum class PrimitiveType { String, Float, Int, Bool };

enum class Multiplicity {
    ZeroOrOne,  // 0..1
    One,        // 1..1
    Any,        // 0..*
    AtLeastOne, // 1..*
};

const char* to_string(PrimitiveType t);
const char* to_string(Multiplicity m);
PrimitiveType primitive_type_from_string(const std::string& s);
Multiplicity multiplicity_from_string(const std::string& s);

struct AttributeDef {
    std::string name;
    PrimitiveType type = PrimitiveType::String;
};

struct ReferenceDef {
    std::string name;
    std::string target;
    Multiplicity multiplicity = Multiplicity::Any;
    bool containment = false;
};

struct MetaClass {
    std::string name;
    std::vector<AttributeDef> attributes;
    std::vector<ReferenceDef> references;

    const AttributeDef* find_attribute(const std::string& n) const;
    const ReferenceDef* find_reference(const std::string& n) const;
};

struct Metamodel {
    std::string name;
    std::vector<MetaClass> classes;

    const MetaClass* find_class(const std::string& n) const;
};

// Attribute value. Int and Float stay distinct so conformance can type-check;
// comparisons coerce where the evaluators allow it.
using Value = std::variant<std::string, double, int64_t, bool>;

bool value_matches_type(const Value& v, PrimitiveType t);
std::string value_to_display(const Value& v);

struct ModelObject {
    std::string id;
    std::string class_name;
    std::map<std::string, Value> attributes;
    std::map<std::string, std::vector<std::string>> references;

    bool operator==(const ModelObject&) const = default;
};

class InstanceModel {
public:
    InstanceModel() = default;
    InstanceModel(std::string metamodel_name, std::shared_ptr<const Metamodel> mm,
                  std::vector<ModelObject> objects);

    const std::string& metamodel_name() const { return metamodel_name_; }
    const Metamodel& metamodel() const;
    const std::shared_ptr<const Metamodel>& metamodel_ptr() const { return metamodel_; }

    const std::vector<ModelObject>& objects() const { return objects_; }
    std::vector<ModelObject>& mutable_objects() { return objects_; }

    const ModelObject* find(const std::string& id) const;
    // Throwing variant for contexts where the id is known to resolve.
    const ModelObject& resolve(const std::string& id) const;

    const MetaClass& class_of(const ModelObject& obj) const;

    std::vector<const ModelObject*> objects_of_class(const std::string& class_name) const;

    // Structural equality: same metamodel name, same objects keyed by id,
    // independent of document order.
    bool structurally_equal(const InstanceModel& other) const;

private:
    std::string metamodel_name_;
    std::shared_ptr<const Metamodel> metamodel_;
    std::vector<ModelObject> objects_;
    std::unordered_map<std::string, size_t> index_;
};

// navigate: attribute name -> primitive value, reference name -> resolved
// object list (0..1 yields length <= 1). Absent attributes and unknown
// features raise; callers that need laxer semantics use the raw maps.
using NavigationResult = std::variant<Value, std::vector<const ModelObject*>>;

NavigationResult navigate(const InstanceModel& m, const ModelObject& obj,
                          const std::string& feature);

namespace builtin {

// The event-chain metamodel shipped with the toolchain: EventChain
// containing SoftwareNode objects that read and write shared Data signals
// and chain through nextstep.
const std::string& event_chain_metamodel_json();
std::shared_ptr<const Metamodel> event_chain_metamodel();

// The two shipped design invariants over that metamodel.
const std::string& design_constraints_text();

} // namespace builtin

} // namespace evchain
