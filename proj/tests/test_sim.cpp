#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evchain/event_chain.hpp"
#include "evchain/m2t.hpp"
#include "evchain/model_io.hpp"
#include "evchain/sim.hpp"
#include "evchain/text.hpp"

#include "test_support.hpp"

#include <cmath>

using namespace evchain;
using namespace evchain::sim;

namespace {

std::string aeb_manifest() {
    std::string assets = testsup::assets_dir();
    auto desc = ingest::parse_event_chain(read_file(assets + "/aeb/event_chain.json"));
    auto reg =
        ingest::parse_component_registry(read_file(assets + "/aeb/component_registry.json"));
    InstanceModel m = ingest::lower_to_instance(desc, reg, ingest::FrequencyPolicy{},
                                                evchain::builtin::event_chain_metamodel());
    auto files = m2t::render(
        m2t::parse_template(m2t::builtin::wiring_manifest_template()), m);
    return files.files.at(0).content;
}

} // namespace

TEST_CASE("ttc_calculate: division, guard, and error") {
    CHECK(ttc_calculate(20.0, 10.0) == 2.0);
    CHECK(ttc_calculate(5.0, 10.0) == 0.5);
    CHECK(std::isinf(ttc_calculate(10.0, 0.0)));
    CHECK(std::isinf(ttc_calculate(10.0, -3.0)));
    CHECK_THROWS_WITH_AS(ttc_calculate(-1.0, 5.0), doctest::Contains("negative distance"),
                         Error);
}

TEST_CASE("braking_decision: thresholds and ramp") {
    CHECK(braking_decision(0.5) == 1.0);
    CHECK(braking_decision(0.99) == 1.0);
    CHECK(braking_decision(1.0) == 1.0);              // ramp value at the boundary
    CHECK(braking_decision(1.5) == 0.5);              // (2.0 - 1.5) / 1.0
    CHECK(braking_decision(1.99) == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(braking_decision(2.0) == 0.0);
    CHECK(braking_decision(2.5) == 0.0);
    CHECK(braking_decision(std::numeric_limits<double>::infinity()) == 0.0);

    // Normalization over a dense sweep.
    for (double ttc = 0.0; ttc <= 5.0; ttc += 0.001) {
        double b = braking_decision(ttc);
        CHECK(b >= 0.0);
        CHECK(b <= 1.0);
    }
}

TEST_CASE("load_wiring parses the generated AEB manifest") {
    NodeGraph graph = load_wiring(aeb_manifest());
    REQUIRE(graph.nodes.size() == 4);
    CHECK(graph.nodes[0].name == "ObjectDetection");
    CHECK(graph.nodes[1].subscriptions.size() == 2);
    CHECK(graph.nodes[1].subscriptions[1].input_name == "vehicle_status");
    CHECK(graph.nodes[3].publications[0].topic ==
          "/carla/ego_vehicle/vehicle_control_cmd");
    CHECK(graph.nodes[0].behavior_key == "ObjectDetection");
}

TEST_CASE("load_wiring: empty manifest, schema errors, strict mode") {
    CHECK(load_wiring(R"({"nodes": []})").nodes.empty());
    CHECK_THROWS_AS(load_wiring("not json"), Error);
    CHECK_THROWS_WITH_AS(load_wiring(R"({"nodes":[{"name":"a"}]})"),
                         doctest::Contains("frequency"), Error);

    const char* ghost = R"({"nodes":[
        {"name":"a","frequency":10.0,
         "subscriptions":[{"topic":"/ghost","message_type":"x/Y","field":"f",
                           "input":"v"}],
         "publications":[]}]})";
    CHECK_NOTHROW(load_wiring(ghost)); // lax by default
    WiringOptions strict;
    strict.strict = true;
    CHECK_THROWS_WITH_AS(load_wiring(ghost, strict),
                         doctest::Contains("dangling subscription"), Error);

    WiringOptions strict_with_world;
    strict_with_world.strict = true;
    strict_with_world.world_topics = {"/ghost"};
    CHECK_NOTHROW(load_wiring(ghost, strict_with_world));

    // The AEB manifest passes strict mode given the scenario world topics.
    WiringOptions aeb_strict;
    aeb_strict.strict = true;
    aeb_strict.world_topics = AebScenario{}.world_topics();
    CHECK_NOTHROW(load_wiring(aeb_manifest(), aeb_strict));
}

TEST_CASE("AEB scenario: ego stops before the obstacle for all sampled speeds") {
    NodeGraph graph = load_wiring(aeb_manifest());
    BehaviorRegistry behaviors = reference_behaviors();

    for (double v0 : {5.0, 10.0, 15.0}) {
        AebScenario sc;
        sc.initial_speed_mps = v0;
        ScenarioTrace trace = run_scenario(graph, behaviors, sc);

        INFO("v0 = ", v0);
        CHECK(trace.stopped());
        CHECK_FALSE(trace.collided());
        CHECK(trace.final_gap() > 0.0);
        CHECK(scenario_passed(trace));

        // Brake force normalized at every tick.
        for (const auto& tick : trace.ticks) {
            CHECK(tick.brake_force >= 0.0);
            CHECK(tick.brake_force <= 1.0);
        }

        // Monotone engagement: while the gap closes and the obstacle is
        // stationary, the commanded brake force never decreases.
        for (size_t i = 1; i < trace.ticks.size(); ++i) {
            if (trace.ticks[i].speed > 0.0)
                CHECK(trace.ticks[i].brake_force >= trace.ticks[i - 1].brake_force);
        }
        CHECK(trace.warnings.empty());

        // Engagement begins once the gap first closes inside v0 * 2s (the
        // TTC-2.0 crossing), within one sensor sample.
        for (size_t i = 0; i < trace.ticks.size(); ++i) {
            if (trace.ticks[i].brake_force > 0.0) {
                CHECK(trace.ticks[i].gap <= v0 * 2.0);
                REQUIRE(i > 0);
                CHECK(trace.ticks[i - 1].ttc >= 2.0);
                break;
            }
        }
    }
}

TEST_CASE("message timestamps are non-decreasing per topic") {
    NodeGraph graph = load_wiring(aeb_manifest());
    BehaviorRegistry behaviors = reference_behaviors();
    AebScenario sc;
    sc.duration_s = 2.0;
    ScenarioTrace trace = run_scenario(graph, behaviors, sc);
    std::map<std::string, double> last;
    for (const auto& msg : trace.messages) {
        auto it = last.find(msg.topic);
        if (it != last.end())
            CHECK(msg.timestamp >= it->second);
        last[msg.topic] = msg.timestamp;
    }
}

TEST_CASE("scenario determinism: identical runs give identical traces") {
    NodeGraph graph = load_wiring(aeb_manifest());
    BehaviorRegistry behaviors = reference_behaviors();
    AebScenario sc;
    ScenarioTrace a = run_scenario(graph, behaviors, sc);
    ScenarioTrace b = run_scenario(graph, behaviors, sc);
    CHECK(trace_to_csv(a) == trace_to_csv(b));
    CHECK(messages_to_jsonl(a) == messages_to_jsonl(b));
}

TEST_CASE("zero-duration scenario yields an empty trace") {
    NodeGraph graph = load_wiring(aeb_manifest());
    BehaviorRegistry behaviors = reference_behaviors();
    AebScenario sc;
    sc.duration_s = 0.0;
    ScenarioTrace trace = run_scenario(graph, behaviors, sc);
    CHECK(trace.ticks.empty());
    CHECK(trace.messages.empty());
}

TEST_CASE("latest-value semantics: a slow consumer reads the newest message") {
    // Producer at 20 Hz counts activations; consumer at 10 Hz republishes
    // what it read. Sequence-numbered payloads expose stale reads.
    const char* manifest = R"({"nodes":[
      {"name":"producer","frequency":20.0,"subscriptions":[],
       "publications":[{"topic":"/seq","message_type":"std_msgs/Float32",
                        "field":"data","output":"seq"}]},
      {"name":"consumer","frequency":10.0,
       "subscriptions":[{"topic":"/seq","message_type":"std_msgs/Float32",
                         "field":"data","input":"seq"}],
       "publications":[{"topic":"/echo","message_type":"std_msgs/Float32",
                        "field":"data","output":"echo"}]}]})";
    NodeGraph graph = load_wiring(manifest);

    class Counter : public Behavior {
    public:
        std::map<std::string, double> execute(
            const std::map<std::string, double>&) override {
            return {{"seq", double(++n_)}};
        }

    private:
        int n_ = 0;
    };
    BehaviorRegistry behaviors;
    behaviors.add("producer", [] { return std::make_unique<Counter>(); });
    behaviors.add_fn("consumer", [](const std::map<std::string, double>& in) {
        return std::map<std::string, double>{{"echo", in.at("seq")}};
    });

    AebScenario sc;
    sc.duration_s = 1.0;
    sc.dt_s = 0.01;
    ScenarioTrace trace = run_scenario(graph, behaviors, sc);

    // Consumer fires at t = 0, 0.1, 0.2, ...; the producer fired at t too
    // (earlier in chain order), having produced 2k+1 messages by t = 0.1k.
    int echoes = 0;
    for (const auto& msg : trace.messages) {
        if (msg.topic != "/echo")
            continue;
        long k = std::lround(msg.timestamp / 0.1);
        CHECK(msg.payload.at("data") == double(2 * k + 1));
        ++echoes;
    }
    CHECK(echoes == 10);
}

TEST_CASE("nodes skip execution with a warning until inputs arrive") {
    const char* manifest = R"({"nodes":[
      {"name":"lonely","frequency":10.0,
       "subscriptions":[{"topic":"/never","message_type":"x/Y","field":"f",
                         "input":"v"}],
       "publications":[]}]})";
    NodeGraph graph = load_wiring(manifest);
    BehaviorRegistry behaviors;
    behaviors.add_fn("lonely", [](const std::map<std::string, double>& in) {
        return in; // never reached
    });
    AebScenario sc;
    sc.duration_s = 0.5;
    ScenarioTrace trace = run_scenario(graph, behaviors, sc);
    CHECK(trace.node_stats.count("lonely") == 0);
    REQUIRE_FALSE(trace.warnings.empty());
    CHECK(doctest::Contains("msg not received").checkWith(trace.warnings[0].c_str()));
}

TEST_CASE("behavior output contract violations are errors") {
    const char* manifest = R"({"nodes":[
      {"name":"chatty","frequency":10.0,"subscriptions":[],
       "publications":[{"topic":"/a","message_type":"x/Y","field":"f",
                        "output":"expected"}]}]})";
    NodeGraph graph = load_wiring(manifest);

    SUBCASE("undeclared key") {
        BehaviorRegistry behaviors;
        behaviors.add_fn("chatty", [](const std::map<std::string, double>&) {
            return std::map<std::string, double>{{"surprise", 1.0}};
        });
        CHECK_THROWS_WITH_AS(run_scenario(graph, behaviors, AebScenario{}),
                             doctest::Contains("did not produce declared output"), Error);
    }
    SUBCASE("extra key") {
        BehaviorRegistry behaviors;
        behaviors.add_fn("chatty", [](const std::map<std::string, double>&) {
            return std::map<std::string, double>{{"expected", 1.0}, {"extra", 2.0}};
        });
        CHECK_THROWS_WITH_AS(run_scenario(graph, behaviors, AebScenario{}),
                             doctest::Contains("returned 2 outputs"), Error);
    }
    SUBCASE("unresolved behavior key") {
        BehaviorRegistry empty;
        CHECK_THROWS_WITH_AS(run_scenario(graph, empty, AebScenario{}),
                             doctest::Contains("no behavior registered"), Error);
    }
}

TEST_CASE("scenario parameter validation") {
    NodeGraph graph = load_wiring(aeb_manifest());
    BehaviorRegistry behaviors = reference_behaviors();
    AebScenario sc;
    sc.dt_s = 0.1; // sensor and nodes run at 20 Hz: dt must be <= 0.025
    CHECK_THROWS_WITH_AS(run_scenario(graph, behaviors, sc),
                         doctest::Contains("half the fastest period"), Error);

    AebScenario bad;
    bad.initial_speed_mps = -1.0;
    CHECK_THROWS_AS(run_scenario(graph, behaviors, bad), Error);
}

TEST_CASE("trace CSV round-trips through the parser") {
    NodeGraph graph = load_wiring(aeb_manifest());
    BehaviorRegistry behaviors = reference_behaviors();
    AebScenario sc;
    sc.duration_s = 2.0;
    ScenarioTrace trace = run_scenario(graph, behaviors, sc);

    std::string csv = trace_to_csv(trace);
    ScenarioTrace back = trace_from_csv(csv);
    REQUIRE(back.ticks.size() == trace.ticks.size());
    for (size_t i = 0; i < back.ticks.size(); ++i) {
        CHECK(back.ticks[i].time == trace.ticks[i].time);
        CHECK(back.ticks[i].gap == trace.ticks[i].gap);
        CHECK(back.ticks[i].brake_force == trace.ticks[i].brake_force);
    }

    std::string svg = trace_to_svg(back);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
}

TEST_CASE("node metrics: activations counted, input age bounded") {
    NodeGraph graph = load_wiring(aeb_manifest());
    BehaviorRegistry behaviors = reference_behaviors();
    AebScenario sc;
    sc.duration_s = 1.0;
    ScenarioTrace trace = run_scenario(graph, behaviors, sc);

    // 20 Hz for one second: every node fires 20 times, all inputs fresh.
    for (const auto& [name, stats] : trace.node_stats) {
        INFO(name);
        CHECK(stats.activations == 20);
        CHECK(stats.max_input_age_s == 0.0);
    }
}
