#pragma once

#include "evchain/error.hpp"

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace evchain::sim {

// Deterministic in-process pub/sub harness. It executes wiring manifests
// generated from the instance model, with native behaviors standing in for
// the component implementations, and runs the emergency-braking scenario in
// a single-threaded discrete-time loop.

struct Subscription {
    std::string topic;
    std::string message_type;
    std::string field;
    std::string input_name; // execute() argument name
    std::string qos_profile;
};

struct Publication {
    std::string topic;
    std::string message_type;
    std::string field;
    std::string output_name; // key in the execute() result
    std::string qos_profile;
};

struct SimNode {
    std::string name;
    double frequency_hz = 0.0;
    std::vector<Subscription> subscriptions;
    std::vector<Publication> publications;
    std::string behavior_key; // defaults to the node name
};

struct NodeGraph {
    std::vector<SimNode> nodes; // chain order
};

struct Message {
    std::string topic;
    double timestamp = 0.0;
    std::map<std::string, double> payload; // field -> number
};

// Component behavior: named inputs in, named outputs out. The returned keys
// must match the node's declared outputs exactly. Stateful behaviors own
// their state; a fresh instance is created per scenario run.
class Behavior {
public:
    virtual ~Behavior() = default;
    virtual std::map<std::string, double> execute(
        const std::map<std::string, double>& inputs) = 0;
};

using BehaviorFactory = std::function<std::unique_ptr<Behavior>()>;

class BehaviorRegistry {
public:
    void add(const std::string& key, BehaviorFactory factory);
    // Convenience for stateless behaviors.
    void add_fn(const std::string& key,
                std::function<std::map<std::string, double>(
                    const std::map<std::string, double>&)> fn);
    bool contains(const std::string& key) const;
    std::unique_ptr<Behavior> instantiate(const std::string& key) const;

private:
    std::map<std::string, BehaviorFactory> factories_;
};

// TTC = distance / relative_speed for a closing approach; +infinity when
// the relative speed is zero or negative (no collision course).
double ttc_calculate(double distance_m, double relative_speed_mps);

// Brake force from TTC: 1.0 below 1 s, linear ramp (2 - ttc) between 1 and
// 2 s, 0 from 2 s on. Always within [0, 1].
double braking_decision(double ttc_s);

struct WiringOptions {
    bool strict = false; // reject subscriptions nobody publishes
    std::set<std::string> world_topics; // topics the scenario world provides
};

NodeGraph load_wiring(const std::string& manifest_json,
                      const WiringOptions& options = {});

struct AebScenario {
    double initial_speed_mps = 10.0;   // v0
    double initial_gap_m = 50.0;       // d0
    double max_deceleration_mps2 = 8.0;
    double dt_s = 0.01;
    double duration_s = 15.0;          // slowest sampled approach stops ~10.5 s in
    double sensor_frequency_hz = 20.0;

    // World wiring: where the scenario publishes its sensor readings and
    // which topic drives the brake actuator.
    std::string distance_topic = "/carla/ego_vehicle/lidar";
    std::string distance_field = "data";
    std::string speed_topic = "/carla/ego_vehicle/vehicle_status";
    std::string speed_field = "velocity";
    std::string control_topic = "/carla/ego_vehicle/vehicle_control_cmd";
    std::string control_field = "brake";
    std::string ttc_topic = "/ttc"; // traced only
    std::string ttc_field = "data";

    std::set<std::string> world_topics() const {
        return {distance_topic, speed_topic};
    }
};

struct TraceTick {
    double time = 0.0;
    double speed = 0.0;
    double gap = 0.0;
    double ttc = std::numeric_limits<double>::infinity();
    double brake_force = 0.0;
    int messages_published = 0;
};

struct NodeStats {
    int activations = 0;
    double max_input_age_s = 0.0;
};

struct ScenarioTrace {
    std::vector<TraceTick> ticks;
    std::vector<Message> messages; // complete bus log
    std::vector<std::string> warnings;
    std::map<std::string, NodeStats> node_stats;

    bool collided() const;
    bool stopped() const;
    double final_gap() const;
    // First tick time with a nonzero brake command; nullopt if never.
    std::optional<double> first_brake_time() const;
};

// Discrete loop at dt: the world publishes gap and ego speed at the sensor
// frequency, nodes fire at their own rates (phase 0, ties in chain order)
// reading the latest message per subscription, and ego kinematics respond
// to the latest brake command. Runs to duration, a standstill, or contact.
ScenarioTrace run_scenario(const NodeGraph& graph, const BehaviorRegistry& behaviors,
                           const AebScenario& scenario);

// Scenario verdict used by the pipeline and the evaluation harness: the ego
// must come to a stop without the gap ever reaching zero.
bool scenario_passed(const ScenarioTrace& trace);

// Reference implementations for the AEB chain components, keyed by node
// name: detection passthrough, TTC computation, threshold braking, and the
// actuation bridge.
BehaviorRegistry reference_behaviors();

std::string trace_to_csv(const ScenarioTrace& trace);
std::string messages_to_jsonl(const ScenarioTrace& trace);
std::string stats_to_json(const ScenarioTrace& trace);

ScenarioTrace trace_from_csv(const std::string& csv);

// Minimal SVG line chart of speed / gap / brake force over time, for the
// plot subcommand.
std::string trace_to_svg(const ScenarioTrace& trace);

} // namespace evchain::sim
