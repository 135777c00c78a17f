#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evchain/model.hpp"
#include "evchain/model_io.hpp"

#include <random>

using namespace evchain;

namespace {

InstanceModel tiny_model(std::shared_ptr<const Metamodel> mm,
                         std::vector<ModelObject> objects) {
    std::string name = mm->name;
    return InstanceModel(std::move(name), std::move(mm), std::move(objects));
}

ModelObject object(std::string id, std::string cls) {
    ModelObject o;
    o.id = std::move(id);
    o.class_name = std::move(cls);
    return o;
}

} // namespace

TEST_CASE("shipped event-chain metamodel loads with its three classes") {
    auto mm = builtin::event_chain_metamodel();
    REQUIRE(mm->find_class("EventChain"));
    REQUIRE(mm->find_class("SoftwareNode"));
    REQUIRE(mm->find_class("Data"));
    const MetaClass* node = mm->find_class("SoftwareNode");
    CHECK(node->find_attribute("frequency")->type == PrimitiveType::Float);
    CHECK(node->find_reference("nextstep")->multiplicity == Multiplicity::ZeroOrOne);
    CHECK(node->find_reference("input")->target == "Data");
    CHECK(mm->find_class("EventChain")->find_reference("software")->containment);
}

TEST_CASE("empty class list is a valid metamodel") {
    Metamodel mm = load_metamodel(R"({"name": "empty", "classes": []})");
    CHECK(mm.name == "empty");
    CHECK(mm.classes.empty());
}

TEST_CASE("reference to an undeclared class is rejected") {
    const char* doc = R"({
      "name": "broken",
      "classes": [
        {"name": "Robot", "attributes": [],
         "references": [{"name": "sensor", "target": "Sensor",
                         "multiplicity": "0..*", "containment": false}]}
      ]})";
    CHECK_THROWS_WITH_AS(load_metamodel(doc),
                         doctest::Contains("undeclared class 'Sensor'"), Error);
}

TEST_CASE("duplicate class and feature names are rejected") {
    CHECK_THROWS_AS(load_metamodel(R"({"name":"x","classes":[
        {"name":"A","attributes":[],"references":[]},
        {"name":"A","attributes":[],"references":[]}]})"),
                    Error);
    CHECK_THROWS_AS(load_metamodel(R"({"name":"x","classes":[
        {"name":"A","attributes":[{"name":"n","type":"string"},
                                  {"name":"n","type":"int"}],"references":[]}]})"),
                    Error);
}

TEST_CASE("metamodel parse errors carry a position") {
    try {
        load_metamodel("{\n  \"name\": \"x\",\n  garbage\n}");
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
        CHECK(e.line() >= 3);
    }
}

TEST_CASE("instance loading checks classes, types, references and multiplicities") {
    auto mm = builtin::event_chain_metamodel();

    SUBCASE("unknown class") {
        const char* doc = R"({"metamodel":"eventchain","objects":[
            {"id":"chain","class":"EventChain","attributes":{},"references":{}},
            {"id":"x","class":"Unknown","attributes":{},"references":{}}]})";
        CHECK_THROWS_WITH_AS(load_instance(doc, mm),
                             doctest::Contains("unknown class 'Unknown'"), Error);
    }
    SUBCASE("attribute type mismatch") {
        const char* doc = R"({"metamodel":"eventchain","objects":[
            {"id":"chain","class":"EventChain","attributes":{},
             "references":{"software":["n"]}},
            {"id":"n","class":"SoftwareNode",
             "attributes":{"frequency":"fast"},"references":{}}]})";
        CHECK_THROWS_WITH_AS(load_instance(doc, mm),
                             doctest::Contains("does not match declared type 'float'"),
                             Error);
    }
    SUBCASE("two nextstep targets violate 0..1") {
        const char* doc = R"({"metamodel":"eventchain","objects":[
            {"id":"chain","class":"EventChain","attributes":{},
             "references":{"software":["a","b","c"]}},
            {"id":"a","class":"SoftwareNode","attributes":{},
             "references":{"nextstep":["b","c"]}},
            {"id":"b","class":"SoftwareNode","attributes":{},"references":{}},
            {"id":"c","class":"SoftwareNode","attributes":{},"references":{}}]})";
        CHECK_THROWS_WITH_AS(load_instance(doc, mm),
                             doctest::Contains("violate multiplicity 0..1"), Error);
    }
    SUBCASE("dangling reference target") {
        const char* doc = R"({"metamodel":"eventchain","objects":[
            {"id":"chain","class":"EventChain","attributes":{},
             "references":{"software":["ghost"]}}]})";
        CHECK_THROWS_WITH_AS(load_instance(doc, mm),
                             doctest::Contains("dangling target 'ghost'"), Error);
    }
    SUBCASE("duplicate object id") {
        const char* doc = R"({"metamodel":"eventchain","objects":[
            {"id":"chain","class":"EventChain","attributes":{},"references":{}},
            {"id":"chain","class":"EventChain","attributes":{},"references":{}}]})";
        CHECK_THROWS_WITH_AS(load_instance(doc, mm),
                             doctest::Contains("duplicate object id"), Error);
    }
    SUBCASE("exactly one EventChain root required") {
        const char* doc = R"({"metamodel":"eventchain","objects":[
            {"id":"n","class":"SoftwareNode","attributes":{},"references":{}}]})";
        CHECK_THROWS_WITH_AS(load_instance(doc, mm),
                             doctest::Contains("exactly one EventChain"), Error);
    }
    SUBCASE("int literal is accepted for a float attribute") {
        const char* doc = R"({"metamodel":"eventchain","objects":[
            {"id":"chain","class":"EventChain","attributes":{},
             "references":{"software":["n"]}},
            {"id":"n","class":"SoftwareNode","attributes":{"frequency":20},
             "references":{}}]})";
        InstanceModel m = load_instance(doc, mm);
        CHECK(std::get<double>(m.resolve("n").attributes.at("frequency")) == 20.0);
    }
}

TEST_CASE("navigate resolves attributes and references") {
    auto mm = builtin::event_chain_metamodel();
    const char* doc = R"({"metamodel":"eventchain","objects":[
        {"id":"chain","class":"EventChain","attributes":{"name":"c"},
         "references":{"software":["n"]}},
        {"id":"n","class":"SoftwareNode",
         "attributes":{"name":"n","frequency":20.0},
         "references":{"input":["d"]}},
        {"id":"d","class":"Data","attributes":{"name":"sig"},"references":{}}]})";
    InstanceModel m = load_instance(doc, mm);
    const ModelObject& n = m.resolve("n");

    auto freq = navigate(m, n, "frequency");
    CHECK(std::get<double>(std::get<Value>(freq)) == 20.0);

    auto inputs = navigate(m, n, "input");
    auto& list = std::get<std::vector<const ModelObject*>>(inputs);
    REQUIRE(list.size() == 1);
    CHECK(list[0]->id == "d");

    // 0..1 reference with no targets resolves to an empty list.
    auto next = navigate(m, n, "nextstep");
    CHECK(std::get<std::vector<const ModelObject*>>(next).empty());

    CHECK_THROWS_WITH_AS(navigate(m, n, "bogus"), doctest::Contains("no feature 'bogus'"),
                         Error);
    CHECK_THROWS_WITH_AS(navigate(m, n, "existing"), doctest::Contains("is not set"),
                         Error);
}

TEST_CASE("serialization is canonical and round-trips") {
    auto mm = builtin::event_chain_metamodel();
    const char* doc = R"({"metamodel":"eventchain","objects":[
        {"id":"z_node","class":"SoftwareNode",
         "attributes":{"name":"z_node","frequency":12.5,"existing":true},
         "references":{"input":["sig"]}},
        {"id":"chain","class":"EventChain","attributes":{"name":"c"},
         "references":{"software":["z_node"]}},
        {"id":"sig","class":"Data",
         "attributes":{"name":"sig","topicName":"/t","messageType":"std_msgs/Float32",
                        "fieldName":"data","qosProfile":"default"},
         "references":{}}]})";
    InstanceModel m = load_instance(doc, mm);

    std::string first = serialize_instance(m);
    std::string second = serialize_instance(m);
    CHECK(first == second);

    // Objects are emitted sorted by id regardless of document order.
    CHECK(first.find("\"id\": \"chain\"") < first.find("\"id\": \"sig\""));
    CHECK(first.find("\"id\": \"sig\"") < first.find("\"id\": \"z_node\""));

    InstanceModel reloaded = load_instance(first, mm);
    CHECK(m.structurally_equal(reloaded));
    CHECK(reloaded.structurally_equal(m));
    CHECK(serialize_instance(reloaded) == first);
}

TEST_CASE("root-only model serializes to a minimal document and round-trips") {
    auto mm = builtin::event_chain_metamodel();
    InstanceModel m = load_instance(
        R"({"metamodel":"eventchain","objects":[
            {"id":"chain","class":"EventChain","attributes":{},"references":{}}]})",
        mm);
    std::string text = serialize_instance(m);
    CHECK(text.find("\"objects\"") != std::string::npos);
    CHECK(m.structurally_equal(load_instance(text, mm)));
    CHECK(text == serialize_instance(load_instance(text, mm)));
}

TEST_CASE("round-trip holds over randomized chain models") {
    auto mm = builtin::event_chain_metamodel();
    std::mt19937 rng(7);

    for (int trial = 0; trial < 50; ++trial) {
        int node_count = 1 + int(rng() % 5);
        std::vector<ModelObject> objects;
        ModelObject chain = object("chain", "EventChain");
        std::vector<std::string> node_ids;
        std::vector<std::string> data_ids;

        for (int d = 0; d < 3; ++d) {
            ModelObject data = object("data" + std::to_string(d), "Data");
            data.attributes.emplace("name", "sig" + std::to_string(d));
            if (rng() % 2)
                data.attributes.emplace("description", std::string("a value"));
            data_ids.push_back(data.id);
            objects.push_back(std::move(data));
        }
        for (int n = 0; n < node_count; ++n) {
            ModelObject node = object("node" + std::to_string(n), "SoftwareNode");
            node.attributes.emplace("name", node.id);
            node.attributes.emplace("frequency", double(10 * (1 + int(rng() % 5))));
            node.attributes.emplace("existing", bool(rng() % 2));
            std::vector<std::string> in, out;
            for (const auto& d : data_ids) {
                if (rng() % 2) in.push_back(d);
                if (rng() % 2) out.push_back(d);
            }
            if (!in.empty()) node.references.emplace("input", in);
            if (!out.empty()) node.references.emplace("output", out);
            if (n + 1 < node_count)
                node.references.emplace(
                    "nextstep", std::vector<std::string>{"node" + std::to_string(n + 1)});
            node_ids.push_back(node.id);
            objects.push_back(std::move(node));
        }
        chain.references.emplace("software", node_ids);
        objects.push_back(std::move(chain));

        InstanceModel m = tiny_model(mm, std::move(objects));
        check_conformance(m);
        std::string text = serialize_instance(m);
        InstanceModel back = load_instance(text, mm);
        CHECK(m.structurally_equal(back));
        CHECK(serialize_instance(back) == text);
    }
}

TEST_CASE("containment cycles and double containment are rejected") {
    Metamodel mm = load_metamodel(R"({"name":"tree","classes":[
        {"name":"N","attributes":[],
         "references":[{"name":"child","target":"N","multiplicity":"0..*",
                        "containment":true}]}]})");
    auto shared = std::make_shared<const Metamodel>(std::move(mm));

    SUBCASE("self containment") {
        std::vector<ModelObject> objs;
        ModelObject a = object("a", "N");
        a.references.emplace("child", std::vector<std::string>{"a"});
        objs.push_back(std::move(a));
        InstanceModel m = tiny_model(shared, std::move(objs));
        CHECK_THROWS_WITH_AS(check_conformance(m), doctest::Contains("containment"),
                             Error);
    }
    SUBCASE("two containers for one object") {
        std::vector<ModelObject> objs;
        ModelObject a = object("a", "N");
        ModelObject b = object("b", "N");
        ModelObject c = object("c", "N");
        a.references.emplace("child", std::vector<std::string>{"c"});
        b.references.emplace("child", std::vector<std::string>{"c"});
        objs.push_back(std::move(a));
        objs.push_back(std::move(b));
        objs.push_back(std::move(c));
        InstanceModel m = tiny_model(shared, std::move(objs));
        CHECK_THROWS_WITH_AS(check_conformance(m), doctest::Contains("contained twice"),
                             Error);
    }
}
