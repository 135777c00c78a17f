#include "evchain/sim.hpp"

#include "evchain/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace evchain::sim {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr double kTimeEps = 1e-9;

} // namespace

void BehaviorRegistry::add(const std::string& key, BehaviorFactory factory) {
    factories_[key] = std::move(factory);
}

void BehaviorRegistry::add_fn(
    const std::string& key,
    std::function<std::map<std::string, double>(const std::map<std::string, double>&)> fn) {
    class FnBehavior : public Behavior {
    public:
        explicit FnBehavior(decltype(fn) f) : fn_(std::move(f)) {}
        std::map<std::string, double> execute(
            const std::map<std::string, double>& inputs) override {
            return fn_(inputs);
        }

    private:
        std::function<std::map<std::string, double>(const std::map<std::string, double>&)> fn_;
    };
    auto shared = std::make_shared<decltype(fn)>(std::move(fn));
    factories_[key] = [shared]() { return std::make_unique<FnBehavior>(*shared); };
}

bool BehaviorRegistry::contains(const std::string& key) const {
    return factories_.count(key) > 0;
}

std::unique_ptr<Behavior> BehaviorRegistry::instantiate(const std::string& key) const {
    auto it = factories_.find(key);
    if (it == factories_.end())
        throw Error(ErrorKind::Contract, "no behavior registered for key '" + key + "'");
    return it->second();
}

double ttc_calculate(double distance_m, double relative_speed_mps) {
    if (distance_m < 0.0)
        throw Error(ErrorKind::Contract, "ttc_calculate: negative distance");
    if (relative_speed_mps <= 0.0)
        return std::numeric_limits<double>::infinity();
    return distance_m / relative_speed_mps;
}

double braking_decision(double ttc_s) {
    if (ttc_s < 1.0)
        return 1.0;
    if (ttc_s < 2.0)
        return (2.0 - ttc_s) / 1.0;
    return 0.0;
}

NodeGraph load_wiring(const std::string& manifest_json, const WiringOptions& options) {
    json doc;
    try {
        doc = json::parse(manifest_json);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, std::string("wiring manifest: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array())
        throw Error(ErrorKind::Schema, "wiring manifest: expected {\"nodes\": [...]}");

    NodeGraph graph;
    std::set<std::string> names;
    for (const auto& jn : doc["nodes"]) {
        SimNode node;
        if (!jn.contains("name") || !jn["name"].is_string())
            throw Error(ErrorKind::Schema, "wiring manifest: node without a name");
        node.name = jn["name"].get<std::string>();
        if (!names.insert(node.name).second)
            throw Error(ErrorKind::Schema,
                        "wiring manifest: duplicate node '" + node.name + "'");
        if (!jn.contains("frequency") || !jn["frequency"].is_number())
            throw Error(ErrorKind::Schema,
                        "wiring manifest: node '" + node.name + "' needs a frequency");
        node.frequency_hz = jn["frequency"].get<double>();
        if (node.frequency_hz <= 0.0)
            throw Error(ErrorKind::Schema,
                        "wiring manifest: node '" + node.name + "' frequency must be > 0");
        node.behavior_key = node.name;

        auto read_endpoint = [&](const json& je, const char* name_key) {
            for (const char* key : {"topic", "message_type", "field", name_key})
                if (!je.contains(key) || !je[key].is_string())
                    throw Error(ErrorKind::Schema,
                                "wiring manifest: node '" + node.name +
                                    "' endpoint missing '" + key + "'");
        };
        if (jn.contains("subscriptions")) {
            for (const auto& js : jn["subscriptions"]) {
                read_endpoint(js, "input");
                Subscription s;
                s.topic = js["topic"].get<std::string>();
                s.message_type = js["message_type"].get<std::string>();
                s.field = js["field"].get<std::string>();
                s.input_name = js["input"].get<std::string>();
                if (js.contains("qos_profile"))
                    s.qos_profile = js["qos_profile"].get<std::string>();
                node.subscriptions.push_back(std::move(s));
            }
        }
        if (jn.contains("publications")) {
            for (const auto& jp : jn["publications"]) {
                read_endpoint(jp, "output");
                Publication p;
                p.topic = jp["topic"].get<std::string>();
                p.message_type = jp["message_type"].get<std::string>();
                p.field = jp["field"].get<std::string>();
                p.output_name = jp["output"].get<std::string>();
                if (jp.contains("qos_profile"))
                    p.qos_profile = jp["qos_profile"].get<std::string>();
                node.publications.push_back(std::move(p));
            }
        }
        graph.nodes.push_back(std::move(node));
    }

    if (options.strict) {
        std::set<std::string> published = options.world_topics;
        for (const auto& n : graph.nodes)
            for (const auto& p : n.publications)
                published.insert(p.topic);
        for (const auto& n : graph.nodes)
            for (const auto& s : n.subscriptions)
                if (!published.count(s.topic))
                    throw Error(ErrorKind::Schema,
                                "dangling subscription: node '" + n.name +
                                    "' listens on unpublished topic '" + s.topic + "'");
    }
    return graph;
}

bool ScenarioTrace::collided() const {
    for (const auto& t : ticks)
        if (t.gap <= 0.0)
            return true;
    return false;
}

bool ScenarioTrace::stopped() const {
    return !ticks.empty() && ticks.back().speed == 0.0;
}

double ScenarioTrace::final_gap() const {
    return ticks.empty() ? 0.0 : ticks.back().gap;
}

std::optional<double> ScenarioTrace::first_brake_time() const {
    for (const auto& t : ticks)
        if (t.brake_force > 0.0)
            return t.time;
    return std::nullopt;
}

ScenarioTrace run_scenario(const NodeGraph& graph, const BehaviorRegistry& behaviors,
                           const AebScenario& sc) {
    if (sc.initial_speed_mps <= 0.0 || sc.initial_gap_m <= 0.0 ||
        sc.max_deceleration_mps2 <= 0.0 || sc.dt_s <= 0.0 || sc.duration_s < 0.0 ||
        sc.sensor_frequency_hz <= 0.0)
        throw Error(ErrorKind::Config, "scenario parameters must be positive");
    double max_hz = sc.sensor_frequency_hz;
    for (const auto& n : graph.nodes)
        max_hz = std::max(max_hz, n.frequency_hz);
    if (sc.dt_s > 1.0 / (2.0 * max_hz) + kTimeEps)
        throw Error(ErrorKind::Config,
                    "scenario dt must be at most half the fastest period (dt <= " +
                        format_double(1.0 / (2.0 * max_hz)) + ")");

    struct LiveNode {
        const SimNode* def;
        std::unique_ptr<Behavior> behavior;
        double next_fire = 0.0;
    };
    std::vector<LiveNode> live;
    live.reserve(graph.nodes.size());
    for (const auto& n : graph.nodes)
        live.push_back({&n, behaviors.instantiate(n.behavior_key), 0.0});

    ScenarioTrace trace;
    std::map<std::string, Message> latest; // last message per topic
    std::map<std::string, bool> warned_no_input;

    double v = sc.initial_speed_mps;
    double gap = sc.initial_gap_m;
    double sensor_next = 0.0;

    auto publish = [&](const std::string& topic, double t,
                       std::map<std::string, double> payload, int& counter) {
        Message msg{topic, t, std::move(payload)};
        latest[topic] = msg;
        trace.messages.push_back(std::move(msg));
        ++counter;
    };

    const long max_ticks = static_cast<long>(sc.duration_s / sc.dt_s + kTimeEps);
    for (long k = 0; k < max_ticks; ++k) {
        const double t = k * sc.dt_s;
        int published_now = 0;

        // World sensors at the sensor rate.
        if (t + kTimeEps >= sensor_next) {
            sensor_next += 1.0 / sc.sensor_frequency_hz;
            publish(sc.distance_topic, t, {{sc.distance_field, gap}}, published_now);
            publish(sc.speed_topic, t, {{sc.speed_field, v}}, published_now);
        }

        // Nodes fire at their own rates; ties resolve in chain order.
        for (auto& ln : live) {
            if (t + kTimeEps < ln.next_fire)
                continue;
            ln.next_fire += 1.0 / ln.def->frequency_hz;

            std::map<std::string, double> inputs;
            bool ready = true;
            double oldest = t;
            for (const auto& sub : ln.def->subscriptions) {
                auto it = latest.find(sub.topic);
                if (it == latest.end()) {
                    if (!warned_no_input[ln.def->name]) {
                        trace.warnings.push_back("t=" + format_double(t) + " node " +
                                                 ln.def->name + ": msg not received on " +
                                                 sub.topic);
                        warned_no_input[ln.def->name] = true;
                    }
                    ready = false;
                    break;
                }
                auto field = it->second.payload.find(sub.field);
                if (field == it->second.payload.end())
                    throw Error(ErrorKind::Contract,
                                "message on '" + sub.topic + "' lacks field '" +
                                    sub.field + "' required by node '" + ln.def->name + "'");
                inputs[sub.input_name] = field->second;
                oldest = std::min(oldest, it->second.timestamp);
            }
            if (!ready)
                continue;

            std::map<std::string, double> outputs = ln.behavior->execute(inputs);

            // Output contract: keys must match the declared outputs exactly.
            if (outputs.size() != ln.def->publications.size())
                throw Error(ErrorKind::Contract,
                            "behavior '" + ln.def->behavior_key + "' returned " +
                                std::to_string(outputs.size()) + " outputs, declared " +
                                std::to_string(ln.def->publications.size()));
            for (const auto& pub : ln.def->publications) {
                auto it = outputs.find(pub.output_name);
                if (it == outputs.end())
                    throw Error(ErrorKind::Contract,
                                "behavior '" + ln.def->behavior_key +
                                    "' did not produce declared output '" +
                                    pub.output_name + "'");
                publish(pub.topic, t, {{pub.field, it->second}}, published_now);
            }

            auto& stats = trace.node_stats[ln.def->name];
            ++stats.activations;
            stats.max_input_age_s = std::max(stats.max_input_age_s, t - oldest);
        }

        // Actuation and kinematics.
        double brake = 0.0;
        if (auto it = latest.find(sc.control_topic); it != latest.end()) {
            auto field = it->second.payload.find(sc.control_field);
            if (field != it->second.payload.end())
                brake = field->second;
        }
        double ttc = std::numeric_limits<double>::infinity();
        if (auto it = latest.find(sc.ttc_topic); it != latest.end()) {
            auto field = it->second.payload.find(sc.ttc_field);
            if (field != it->second.payload.end())
                ttc = field->second;
        }

        trace.ticks.push_back({t, v, gap, ttc, brake, published_now});

        if (v == 0.0 || gap <= 0.0)
            break; // standstill or contact; the scenario is decided

        v = std::max(0.0, v - brake * sc.max_deceleration_mps2 * sc.dt_s);
        gap -= v * sc.dt_s;
    }
    return trace;
}

bool scenario_passed(const ScenarioTrace& trace) {
    return trace.stopped() && !trace.collided();
}

namespace {

class TtcBehavior : public Behavior {
public:
    std::map<std::string, double> execute(
        const std::map<std::string, double>& in) override {
        return {{"ttc", ttc_calculate(in.at("scan"), in.at("vehicle_status"))}};
    }
};

class BrakingBehavior : public Behavior {
public:
    std::map<std::string, double> execute(
        const std::map<std::string, double>& in) override {
        return {{"brake_cmd", braking_decision(in.at("ttc"))}};
    }
};

// Brake-hold actuation: once emergency braking engages, the commanded
// force is held at its maximum until standstill. A memoryless passthrough
// cannot bring a drag-free point mass to rest (the TTC loop settles into
// an asymptotic crawl), and holding until standstill is how deployed AEB
// actuation behaves.
class BrakeHoldBehavior : public Behavior {
public:
    std::map<std::string, double> execute(
        const std::map<std::string, double>& in) override {
        held_ = std::max(held_, in.at("brake_cmd"));
        return {{"control_cmd", held_}};
    }

private:
    double held_ = 0.0;
};

} // namespace

BehaviorRegistry reference_behaviors() {
    BehaviorRegistry reg;
    // Detection is abstracted: the world already publishes the shortest
    // obstacle distance, the node forwards it as the scan value.
    reg.add_fn("ObjectDetection", [](const std::map<std::string, double>& in) {
        return std::map<std::string, double>{{"scan", in.at("pointcloud")}};
    });
    reg.add("TTC_Calculation", [] { return std::make_unique<TtcBehavior>(); });
    reg.add("Braking_Decision", [] { return std::make_unique<BrakingBehavior>(); });
    reg.add("Carla_Vehicle_Control", [] { return std::make_unique<BrakeHoldBehavior>(); });
    return reg;
}

std::string trace_to_csv(const ScenarioTrace& trace) {
    std::ostringstream out;
    out << "time,speed,gap,ttc,brake_force\n";
    for (const auto& t : trace.ticks) {
        out << format_double(t.time) << ',' << format_double(t.speed) << ','
            << format_double(t.gap) << ',';
        if (std::isinf(t.ttc))
            out << "inf";
        else
            out << format_double(t.ttc);
        out << ',' << format_double(t.brake_force) << '\n';
    }
    return out.str();
}

ScenarioTrace trace_from_csv(const std::string& csv) {
    ScenarioTrace trace;
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "time,speed,gap,ttc,brake_force")
        throw Error(ErrorKind::Schema, "trace csv: unexpected header");
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        auto cols = split(trim(line), ',');
        if (cols.size() != 5)
            throw Error(ErrorKind::Schema, "trace csv: expected 5 columns");
        TraceTick t;
        t.time = std::stod(cols[0]);
        t.speed = std::stod(cols[1]);
        t.gap = std::stod(cols[2]);
        t.ttc = cols[3] == "inf" ? std::numeric_limits<double>::infinity()
                                 : std::stod(cols[3]);
        t.brake_force = std::stod(cols[4]);
        trace.ticks.push_back(t);
    }
    return trace;
}

std::string messages_to_jsonl(const ScenarioTrace& trace) {
    std::ostringstream out;
    for (const auto& m : trace.messages) {
        ordered_json j;
        j["t"] = m.timestamp;
        j["topic"] = m.topic;
        j["payload"] = ordered_json::object();
        for (const auto& [field, value] : m.payload)
            j["payload"][field] = value;
        out << j.dump() << '\n';
    }
    return out.str();
}

std::string stats_to_json(const ScenarioTrace& trace) {
    ordered_json doc;
    doc["nodes"] = ordered_json::object();
    for (const auto& [name, stats] : trace.node_stats) {
        ordered_json js;
        js["activations"] = stats.activations;
        js["max_input_age_s"] = stats.max_input_age_s;
        doc["nodes"][name] = std::move(js);
    }
    return doc.dump(2) + "\n";
}

std::string trace_to_svg(const ScenarioTrace& trace) {
    const int width = 720, height = 420, margin = 50;
    const double plot_w = width - 2.0 * margin;
    const double plot_h = height - 2.0 * margin;

    double t_max = 1e-9, y_max = 1e-9;
    for (const auto& tick : trace.ticks) {
        t_max = std::max(t_max, tick.time);
        y_max = std::max({y_max, tick.speed, tick.gap});
    }

    auto x_of = [&](double t) { return margin + plot_w * (t / t_max); };
    auto y_of = [&](double y) { return height - margin - plot_h * (y / y_max); };

    auto polyline = [&](const char* color, auto getter, double scale) {
        std::ostringstream p;
        p << "  <polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& tick : trace.ticks)
            p << x_of(tick.time) << ',' << y_of(getter(tick) * scale) << ' ';
        p << "\"/>\n";
        return p.str();
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\">\n"
        << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "  <line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
        << width - margin << "\" y2=\"" << height - margin
        << "\" stroke=\"black\"/>\n"
        << "  <line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
        << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    svg << polyline("#1f77b4", [](const TraceTick& t) { return t.gap; }, 1.0);
    svg << polyline("#2ca02c", [](const TraceTick& t) { return t.speed; }, 1.0);
    // Brake force is scaled onto the same axis for visibility.
    svg << polyline("#d62728", [](const TraceTick& t) { return t.brake_force; }, y_max);
    svg << "  <text x=\"" << margin << "\" y=\"" << margin - 16
        << "\" font-family=\"sans-serif\" font-size=\"13\">"
        << "gap (blue, m) / speed (green, m/s) / brake force (red, scaled)"
        << "</text>\n";
    svg << "  <text x=\"" << width / 2 << "\" y=\"" << height - 12
        << "\" font-family=\"sans-serif\" font-size=\"12\">time (s)</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

} // namespace evchain::sim
