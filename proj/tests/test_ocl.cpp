#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evchain/event_chain.hpp"
#include "evchain/model_io.hpp"
#include "evchain/ocl.hpp"
#include "evchain/text.hpp"

#include "test_support.hpp"

using namespace evchain;
using namespace evchain::ocl;

namespace {

InstanceModel aeb_model() {
    std::string assets = testsup::assets_dir();
    auto desc = ingest::parse_event_chain(read_file(assets + "/aeb/event_chain.json"));
    auto reg =
        ingest::parse_component_registry(read_file(assets + "/aeb/component_registry.json"));
    return ingest::lower_to_instance(desc, reg, ingest::FrequencyPolicy{},
                                     builtin::event_chain_metamodel());
}

const ValidationEntry& entry_for(const ValidationReport& report,
                                 const std::string& invariant,
                                 const std::string& object_id) {
    for (const auto& e : report.entries)
        if (e.invariant == invariant && e.object_id == object_id)
            return e;
    REQUIRE_MESSAGE(false, ("no entry for " + invariant + " on " + object_id).c_str());
    std::abort();
}

} // namespace

TEST_CASE("the shipped constraint text parses into the two named invariants") {
    ConstraintSet cs = parse_constraints(builtin::design_constraints_text());
    REQUIRE(cs.contexts.size() == 1);
    CHECK(cs.contexts[0].context_class == "SoftwareNode");
    REQUIRE(cs.contexts[0].invariants.size() == 2);
    CHECK(cs.contexts[0].invariants[0].name == "HasInputAndOutputData");
    CHECK(cs.contexts[0].invariants[1].name == "NextstepFrequencyEqualOrHigher");
}

TEST_CASE("single invariant and syntax error cases") {
    ConstraintSet cs = parse_constraints("context X inv A: self.y->notEmpty()");
    REQUIRE(cs.contexts.size() == 1);
    CHECK(cs.contexts[0].invariants.size() == 1);

    SUBCASE("missing context keyword") {
        try {
            parse_constraints("inv A: self.x");
            FAIL("expected a syntax error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Parse);
            CHECK(doctest::Contains("expected 'context'").checkWith(e.what()));
            CHECK(e.line() == 1);
        }
    }
    SUBCASE("missing invariant name") {
        CHECK_THROWS_AS(parse_constraints("context X inv : self.x"), Error);
    }
    SUBCASE("duplicate invariant names in one context") {
        CHECK_THROWS_WITH_AS(
            parse_constraints("context X inv A: self.x->notEmpty() "
                              "inv A: self.y->notEmpty()"),
            doctest::Contains("duplicate invariant"), Error);
    }
    SUBCASE("positions on later lines") {
        try {
            parse_constraints("context X\n  inv A: self.x->());");
            FAIL("expected a syntax error");
        } catch (const Error& e) {
            CHECK(e.line() == 2);
        }
    }
}

TEST_CASE("AEB instance passes both shipped invariants on every node") {
    InstanceModel m = aeb_model();
    ConstraintSet cs = parse_constraints(builtin::design_constraints_text());
    ValidationReport report = evaluate(cs, m);

    CHECK(report.entries.size() == 8); // 2 invariants x 4 nodes
    CHECK(report.all_passed());
}

TEST_CASE("violations are reported per named invariant and object") {
    InstanceModel m = aeb_model();
    ConstraintSet cs = parse_constraints(builtin::design_constraints_text());

    SUBCASE("removing the input makes HasInputAndOutputData fail for that node") {
        for (auto& obj : m.mutable_objects())
            if (obj.id == "Braking_Decision")
                obj.references.erase("input");
        ValidationReport report = evaluate(cs, m);
        CHECK(entry_for(report, "HasInputAndOutputData", "Braking_Decision").verdict ==
              Verdict::Fail);
        CHECK(report.count(Verdict::Fail) == 1);
    }
    SUBCASE("slower nextstep makes NextstepFrequencyEqualOrHigher fail upstream") {
        for (auto& obj : m.mutable_objects()) {
            if (obj.id == "TTC_Calculation")
                obj.attributes["frequency"] = 50.0;
            if (obj.id == "Braking_Decision")
                obj.attributes["frequency"] = 20.0;
        }
        ValidationReport report = evaluate(cs, m);
        CHECK(entry_for(report, "NextstepFrequencyEqualOrHigher", "TTC_Calculation")
                  .verdict == Verdict::Fail);
        CHECK(report.count(Verdict::Fail) == 1);
    }
}

TEST_CASE("implies short-circuits: false antecedent hides consequent errors") {
    // The consequent navigates nextstep.frequency, which errors on an empty
    // nextstep; the guard must prevent that from ever being evaluated.
    auto mm = builtin::event_chain_metamodel();
    const char* doc = R"({"metamodel":"eventchain","objects":[
        {"id":"chain","class":"EventChain","attributes":{},
         "references":{"software":["last"]}},
        {"id":"last","class":"SoftwareNode",
         "attributes":{"name":"last","frequency":20.0},"references":{}}]})";
    InstanceModel m = load_instance(doc, mm);

    ConstraintSet cs = parse_constraints(
        "context SoftwareNode inv G: "
        "self.nextstep->notEmpty() implies (self.nextstep.frequency >= self.frequency)");
    ValidationReport report = evaluate(cs, m);
    REQUIRE(report.entries.size() == 1);
    CHECK(report.entries[0].verdict == Verdict::Pass);

    // Without the guard the same navigation is an error verdict, not a crash.
    ConstraintSet unguarded = parse_constraints(
        "context SoftwareNode inv U: self.nextstep.frequency >= self.frequency");
    ValidationReport bad = evaluate(unguarded, m);
    REQUIRE(bad.entries.size() == 1);
    CHECK(bad.entries[0].verdict == Verdict::Error);
    CHECK(doctest::Contains("empty 0..1").checkWith(bad.entries[0].message.c_str()));
}

TEST_CASE("error verdicts: absent attributes and type confusion") {
    auto mm = builtin::event_chain_metamodel();
    const char* doc = R"({"metamodel":"eventchain","objects":[
        {"id":"chain","class":"EventChain","attributes":{},
         "references":{"software":["n"]}},
        {"id":"n","class":"SoftwareNode","attributes":{"name":"n"},
         "references":{}}]})";
    InstanceModel m = load_instance(doc, mm);

    SUBCASE("navigating an unset attribute") {
        ValidationReport r =
            evaluate(parse_constraints("context SoftwareNode inv A: self.frequency > 0"), m);
        CHECK(r.entries[0].verdict == Verdict::Error);
        CHECK(doctest::Contains("not set").checkWith(r.entries[0].message.c_str()));
    }
    SUBCASE("string compared against a number") {
        ValidationReport r =
            evaluate(parse_constraints("context SoftwareNode inv A: self.name > 3"), m);
        CHECK(r.entries[0].verdict == Verdict::Error);
    }
    SUBCASE("numeric comparison coerces int and float") {
        ValidationReport r = evaluate(
            parse_constraints("context SoftwareNode inv A: self.name = 'n'"), m);
        CHECK(r.entries[0].verdict == Verdict::Pass);
    }
    SUBCASE("unknown feature") {
        ValidationReport r =
            evaluate(parse_constraints("context SoftwareNode inv A: self.bogus > 1"), m);
        CHECK(r.entries[0].verdict == Verdict::Error);
    }
    SUBCASE("unknown context class throws instead of reporting") {
        CHECK_THROWS_AS(evaluate(parse_constraints("context Nope inv A: self.x > 1"), m),
                        Error);
    }
}

TEST_CASE("forAll and exists iterate with shadowed variables") {
    std::string assets = testsup::assets_dir();
    InstanceModel m = aeb_model();

    ValidationReport all_named = evaluate(
        parse_constraints("context SoftwareNode inv N: "
                          "self.input->forAll(d | d.name <> '')"),
        m);
    CHECK(all_named.all_passed());

    // Empty collections: forAll vacuously true, exists false.
    ValidationReport vacuous = evaluate(
        parse_constraints("context EventChain inv V: "
                          "self.software->forAll(n | n.frequency < 0)"
                          " or self.software->notEmpty()"),
        m);
    CHECK(vacuous.all_passed());

    ValidationReport ex = evaluate(
        parse_constraints("context SoftwareNode inv E: "
                          "self.output->exists(d | d.topicName = '/ttc') or "
                          "self.name <> 'TTC_Calculation'"),
        m);
    CHECK(ex.all_passed());
}

TEST_CASE("report completeness: entries = invariants x context objects") {
    InstanceModel m = aeb_model();
    ConstraintSet cs = parse_constraints(
        "context SoftwareNode inv A: self.input->notEmpty() "
        "inv B: self.output->notEmpty() "
        "context Data inv C: self.topicName <> ''");
    ValidationReport report = evaluate(cs, m);
    size_t nodes = m.objects_of_class("SoftwareNode").size();
    size_t data = m.objects_of_class("Data").size();
    CHECK(report.entries.size() == 2 * nodes + 1 * data);
}

// Independent re-implementation of the two shipped invariants, reading the
// object graph directly. The acceptance suite runs the exhaustive grid;
// this is a quick randomized agreement check.
namespace oracle {

bool has_io(const ModelObject& node) {
    auto in = node.references.find("input");
    auto out = node.references.find("output");
    return in != node.references.end() && !in->second.empty() &&
           out != node.references.end() && !out->second.empty();
}

bool next_freq_ok(const ModelObject& node, const InstanceModel& m) {
    auto next = node.references.find("nextstep");
    if (next == node.references.end() || next->second.empty())
        return true;
    double self_hz = std::get<double>(node.attributes.at("frequency"));
    double next_hz = std::get<double>(
        m.resolve(next->second.front()).attributes.at("frequency"));
    return next_hz >= self_hz;
}

} // namespace oracle

TEST_CASE("evaluator agrees with the hand-rolled checker on random models") {
    auto mm = builtin::event_chain_metamodel();
    ConstraintSet cs = parse_constraints(builtin::design_constraints_text());
    std::mt19937 rng(42);

    for (int trial = 0; trial < 200; ++trial) {
        int node_count = 1 + int(rng() % 5);
        std::vector<ModelObject> objects;
        ModelObject chain;
        chain.id = "chain";
        chain.class_name = "EventChain";
        std::vector<std::string> ids;

        ModelObject sig;
        sig.id = "sig";
        sig.class_name = "Data";
        objects.push_back(sig);

        for (int i = 0; i < node_count; ++i) {
            ModelObject n;
            n.id = "n" + std::to_string(i);
            n.class_name = "SoftwareNode";
            n.attributes.emplace("frequency", double(10 * (1 + int(rng() % 5))));
            if (rng() % 2)
                n.references.emplace("input", std::vector<std::string>{"sig"});
            if (rng() % 2)
                n.references.emplace("output", std::vector<std::string>{"sig"});
            if (i + 1 < node_count && rng() % 4 != 0)
                n.references.emplace("nextstep",
                                     std::vector<std::string>{"n" + std::to_string(i + 1)});
            ids.push_back(n.id);
            objects.push_back(std::move(n));
        }
        chain.references.emplace("software", ids);
        objects.push_back(std::move(chain));
        InstanceModel m(mm->name, mm, std::move(objects));

        ValidationReport report = evaluate(cs, m);
        for (const auto& e : report.entries) {
            const ModelObject& node = m.resolve(e.object_id);
            bool expected = e.invariant == "HasInputAndOutputData"
                                ? oracle::has_io(node)
                                : oracle::next_freq_ok(node, m);
            CHECK(e.verdict == (expected ? Verdict::Pass : Verdict::Fail));
        }
    }
}
