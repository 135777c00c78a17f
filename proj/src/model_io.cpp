#include "evchain/model_io.hpp"

#include "evchain/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace evchain {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

json parse_json(const std::string& document, const char* what) {
    try {
        return json::parse(document);
    } catch (const json::parse_error& e) {
        // nlohmann reports a byte offset; convert to line:column for the
        // position-annotated error contract.
        size_t line = 1, col = 1;
        for (size_t i = 0; i < e.byte && i < document.size(); ++i) {
            if (document[i] == '\n') { ++line; col = 1; } else { ++col; }
        }
        throw Error(ErrorKind::Parse,
                    std::string(what) + ": " + e.what(),
                    static_cast<int>(line), static_cast<int>(col));
    }
}

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw Error(ErrorKind::Schema, where + ": missing field '" + key + "'");
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_string())
        throw Error(ErrorKind::Schema, where + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

Value json_to_value(const json& v, PrimitiveType declared, const std::string& where) {
    switch (declared) {
    case PrimitiveType::String:
        if (v.is_string()) return v.get<std::string>();
        break;
    case PrimitiveType::Float:
        // Integer literals are accepted for float attributes.
        if (v.is_number()) return v.get<double>();
        break;
    case PrimitiveType::Int:
        if (v.is_number_integer()) return v.get<int64_t>();
        break;
    case PrimitiveType::Bool:
        if (v.is_boolean()) return v.get<bool>();
        break;
    }
    throw Error(ErrorKind::Conformance,
                where + ": value does not match declared type '" +
                    std::string(to_string(declared)) + "'");
}

ordered_json value_to_json(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<int64_t>(&v)) return *i;
    return std::get<bool>(v);
}

void check_multiplicity(Multiplicity m, size_t count, const std::string& where) {
    size_t lo = (m == Multiplicity::One || m == Multiplicity::AtLeastOne) ? 1 : 0;
    size_t hi = (m == Multiplicity::ZeroOrOne || m == Multiplicity::One) ? 1 : SIZE_MAX;
    if (count < lo || count > hi)
        throw Error(ErrorKind::Conformance,
                    where + ": " + std::to_string(count) +
                        " target(s) violate multiplicity " + to_string(m));
}

} // namespace

Metamodel load_metamodel(const std::string& document) {
    json doc = parse_json(document, "metamodel");
    if (!doc.is_object())
        throw Error(ErrorKind::Schema, "metamodel: top level must be an object");

    Metamodel mm;
    mm.name = require_string(doc, "name", "metamodel");
    const json& classes = require(doc, "classes", "metamodel");
    if (!classes.is_array())
        throw Error(ErrorKind::Schema, "metamodel: 'classes' must be an array");

    std::set<std::string> class_names;
    for (const auto& jc : classes) {
        MetaClass mc;
        mc.name = require_string(jc, "name", "metamodel class");
        const std::string where = "class '" + mc.name + "'";
        if (!class_names.insert(mc.name).second)
            throw Error(ErrorKind::Schema, "duplicate class name '" + mc.name + "'");

        std::set<std::string> feature_names;
        if (auto it = jc.find("attributes"); it != jc.end()) {
            for (const auto& ja : *it) {
                AttributeDef ad;
                ad.name = require_string(ja, "name", where + " attribute");
                ad.type = primitive_type_from_string(require_string(ja, "type", where));
                if (!feature_names.insert(ad.name).second)
                    throw Error(ErrorKind::Schema,
                                where + ": duplicate feature name '" + ad.name + "'");
                mc.attributes.push_back(std::move(ad));
            }
        }
        if (auto it = jc.find("references"); it != jc.end()) {
            for (const auto& jr : *it) {
                ReferenceDef rd;
                rd.name = require_string(jr, "name", where + " reference");
                rd.target = require_string(jr, "target", where + " reference");
                rd.multiplicity =
                    multiplicity_from_string(require_string(jr, "multiplicity", where));
                rd.containment = require(jr, "containment", where).get<bool>();
                if (!feature_names.insert(rd.name).second)
                    throw Error(ErrorKind::Schema,
                                where + ": duplicate feature name '" + rd.name + "'");
                mc.references.push_back(std::move(rd));
            }
        }
        mm.classes.push_back(std::move(mc));
    }

    // Every reference target must name a declared class.
    for (const auto& mc : mm.classes)
        for (const auto& rd : mc.references)
            if (!class_names.count(rd.target))
                throw Error(ErrorKind::Schema,
                            "class '" + mc.name + "' reference '" + rd.name +
                                "' targets undeclared class '" + rd.target + "'");
    return mm;
}

namespace {

void check_conformance_impl(const InstanceModel& m) {
    const Metamodel& mm = m.metamodel();
    if (m.metamodel_name() != mm.name)
        throw Error(ErrorKind::Conformance,
                    "instance declares metamodel '" + m.metamodel_name() +
                        "' but was checked against '" + mm.name + "'");

    std::set<std::string> ids;
    for (const auto& obj : m.objects())
        if (!ids.insert(obj.id).second)
            throw Error(ErrorKind::Conformance, "duplicate object id '" + obj.id + "'");

    // container id -> set, to enforce single containment per object.
    std::map<std::string, std::string> container_of;

    for (const auto& obj : m.objects()) {
        const MetaClass* mc = mm.find_class(obj.class_name);
        if (!mc)
            throw Error(ErrorKind::Conformance,
                        "object '" + obj.id + "': unknown class '" + obj.class_name + "'");
        const std::string where = "object '" + obj.id + "'";

        for (const auto& [name, value] : obj.attributes) {
            const AttributeDef* ad = mc->find_attribute(name);
            if (!ad)
                throw Error(ErrorKind::Conformance,
                            where + ": class '" + mc->name + "' declares no attribute '" +
                                name + "'");
            if (!value_matches_type(value, ad->type))
                throw Error(ErrorKind::Conformance,
                            where + ": attribute '" + name + "' does not match type '" +
                                std::string(to_string(ad->type)) + "'");
        }

        for (const auto& [name, targets] : obj.references) {
            const ReferenceDef* rd = mc->find_reference(name);
            if (!rd)
                throw Error(ErrorKind::Conformance,
                            where + ": class '" + mc->name + "' declares no reference '" +
                                name + "'");
            check_multiplicity(rd->multiplicity, targets.size(),
                               where + " reference '" + name + "'");
            for (const auto& tid : targets) {
                const ModelObject* target = m.find(tid);
                if (!target)
                    throw Error(ErrorKind::Conformance,
                                where + " reference '" + name + "': dangling target '" +
                                    tid + "'");
                if (target->class_name != rd->target)
                    throw Error(ErrorKind::Conformance,
                                where + " reference '" + name + "': target '" + tid +
                                    "' has class '" + target->class_name + "', expected '" +
                                    rd->target + "'");
                if (rd->containment) {
                    auto [it, inserted] = container_of.emplace(tid, obj.id);
                    if (!inserted)
                        throw Error(ErrorKind::Conformance,
                                    "object '" + tid + "' is contained twice (by '" +
                                        it->second + "' and '" + obj.id + "')");
                }
            }
        }

        // Lower-bound check also applies to references that are entirely
        // absent from the document.
        for (const auto& rd : mc->references) {
            if (rd.multiplicity == Multiplicity::One ||
                rd.multiplicity == Multiplicity::AtLeastOne) {
                auto it = obj.references.find(rd.name);
                size_t count = (it == obj.references.end()) ? 0 : it->second.size();
                check_multiplicity(rd.multiplicity, count,
                                   where + " reference '" + rd.name + "'");
            }
        }
    }

    // Containment must form a forest: no object reachable from itself.
    for (const auto& obj : m.objects()) {
        std::string cur = obj.id;
        size_t hops = 0;
        while (true) {
            auto it = container_of.find(cur);
            if (it == container_of.end())
                break;
            cur = it->second;
            if (cur == obj.id || ++hops > m.objects().size())
                throw Error(ErrorKind::Conformance,
                            "containment cycle involving object '" + obj.id + "'");
        }
    }

    // The event-chain metamodel requires exactly one EventChain root.
    if (mm.find_class("EventChain")) {
        size_t roots = m.objects_of_class("EventChain").size();
        if (roots != 1)
            throw Error(ErrorKind::Conformance,
                        "expected exactly one EventChain object, found " +
                            std::to_string(roots));
    }
}

} // namespace

void check_conformance(const InstanceModel& m) { check_conformance_impl(m); }

InstanceModel load_instance(const std::string& document,
                            std::shared_ptr<const Metamodel> mm) {
    if (!mm)
        throw Error(ErrorKind::Config, "load_instance: null metamodel");
    json doc = parse_json(document, "instance model");
    if (!doc.is_object())
        throw Error(ErrorKind::Schema, "instance model: top level must be an object");

    std::string mm_name = require_string(doc, "metamodel", "instance model");
    const json& objects = require(doc, "objects", "instance model");
    if (!objects.is_array())
        throw Error(ErrorKind::Schema, "instance model: 'objects' must be an array");

    std::vector<ModelObject> objs;
    objs.reserve(objects.size());
    for (const auto& jo : objects) {
        ModelObject obj;
        obj.id = require_string(jo, "id", "object");
        obj.class_name = require_string(jo, "class", "object '" + obj.id + "'");
        const std::string where = "object '" + obj.id + "'";

        const MetaClass* mc = mm->find_class(obj.class_name);
        if (!mc)
            throw Error(ErrorKind::Conformance,
                        where + ": unknown class '" + obj.class_name + "'");

        if (auto it = jo.find("attributes"); it != jo.end()) {
            if (!it->is_object())
                throw Error(ErrorKind::Schema, where + ": 'attributes' must be an object");
            for (const auto& [name, jv] : it->items()) {
                const AttributeDef* ad = mc->find_attribute(name);
                if (!ad)
                    throw Error(ErrorKind::Conformance,
                                where + ": class '" + mc->name +
                                    "' declares no attribute '" + name + "'");
                obj.attributes.emplace(
                    name, json_to_value(jv, ad->type, where + " attribute '" + name + "'"));
            }
        }
        if (auto it = jo.find("references"); it != jo.end()) {
            if (!it->is_object())
                throw Error(ErrorKind::Schema, where + ": 'references' must be an object");
            for (const auto& [name, jv] : it->items()) {
                if (!jv.is_array())
                    throw Error(ErrorKind::Schema,
                                where + ": reference '" + name + "' must be an array");
                std::vector<std::string> targets;
                for (const auto& jt : jv) {
                    if (!jt.is_string())
                        throw Error(ErrorKind::Schema,
                                    where + ": reference '" + name +
                                        "' targets must be strings");
                    targets.push_back(jt.get<std::string>());
                }
                obj.references.emplace(name, std::move(targets));
            }
        }
        objs.push_back(std::move(obj));
    }

    InstanceModel m(std::move(mm_name), std::move(mm), std::move(objs));
    check_conformance_impl(m);
    return m;
}

std::string serialize_instance(const InstanceModel& m) {
    std::vector<const ModelObject*> ordered;
    ordered.reserve(m.objects().size());
    for (const auto& o : m.objects())
        ordered.push_back(&o);
    std::sort(ordered.begin(), ordered.end(),
              [](const ModelObject* a, const ModelObject* b) { return a->id < b->id; });

    ordered_json doc;
    doc["metamodel"] = m.metamodel_name();
    doc["objects"] = ordered_json::array();
    for (const ModelObject* o : ordered) {
        ordered_json jo;
        jo["id"] = o->id;
        jo["class"] = o->class_name;
        ordered_json attrs = ordered_json::object();
        for (const auto& [name, value] : o->attributes) // std::map: already sorted
            attrs[name] = value_to_json(value);
        jo["attributes"] = std::move(attrs);
        ordered_json refs = ordered_json::object();
        for (const auto& [name, targets] : o->references)
            refs[name] = targets;
        jo["references"] = std::move(refs);
        doc["objects"].push_back(std::move(jo));
    }
    return doc.dump(2) + "\n";
}

} // namespace evchain
