#include <concurpaas/harness/scenario.hpp>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include <concurpaas/errors.hpp>

namespace concurpaas::harness {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string &where, const std::string &what) {
    throw ParseError("scenario: " + where + ": " + what);
}

const json &require(const json &obj, const std::string &key,
                    const std::string &where) {
    auto it = obj.find(key);
    if (it == obj.end())
        fail(where, "missing field '" + key + "'");
    return *it;
}

std::uint64_t get_u64(const json &obj, const std::string &key,
                      const std::string &where) {
    const json &v = require(obj, key, where);
    if (!v.is_number_unsigned())
        fail(where, "field '" + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::uint64_t get_u64_or(const json &obj, const std::string &key,
                         std::uint64_t fallback, const std::string &where) {
    if (!obj.contains(key))
        return fallback;
    return get_u64(obj, key, where);
}

double get_f64(const json &obj, const std::string &key,
               const std::string &where) {
    const json &v = require(obj, key, where);
    if (!v.is_number())
        fail(where, "field '" + key + "' must be a number");
    return v.get<double>();
}

std::string get_str(const json &obj, const std::string &key,
                    const std::string &where) {
    const json &v = require(obj, key, where);
    if (!v.is_string())
        fail(where, "field '" + key + "' must be a string");
    return v.get<std::string>();
}

bool get_bool_or(const json &obj, const std::string &key, bool fallback,
                 const std::string &where) {
    if (!obj.contains(key))
        return fallback;
    const json &v = obj.at(key);
    if (!v.is_boolean())
        fail(where, "field '" + key + "' must be a boolean");
    return v.get<bool>();
}

std::vector<iot::TracePoint> parse_trace(const json &arr,
                                         const std::string &where) {
    if (!arr.is_array())
        fail(where, "field 'trace' must be an array of [t_us, value] pairs");
    std::vector<iot::TracePoint> trace;
    for (const json &p : arr) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number_unsigned() ||
            !p[1].is_number())
            fail(where, "trace entries must be [t_us, value] pairs");
        trace.push_back(iot::TracePoint{VirtualTime{p[0].get<std::uint64_t>()},
                                        p[1].get<double>()});
    }
    return trace;
}

iot::SensorSpec parse_sensor(const json &obj) {
    if (!obj.is_object())
        fail("sensors", "each sensor must be an object");
    iot::SensorSpec spec;
    spec.sensor_id = get_str(obj, "sensor_id", "sensors");
    const std::string where = "sensor '" + spec.sensor_id + "'";
    try {
        spec.kind = iot::sensor_kind_from_string(get_str(obj, "kind", where));
    } catch (const Error &e) {
        fail(where, e.what());
    }
    spec.sample_interval = get_u64(obj, "sample_interval_us", where);
    spec.enabled = get_bool_or(obj, "enabled", true, where);
    if (obj.contains("trace"))
        spec.trace = parse_trace(obj.at("trace"), where);
    return spec;
}

runtime::ProcessSpec parse_process(const json &obj) {
    if (!obj.is_object())
        fail("app.processes", "each process must be an object");
    runtime::ProcessSpec spec;
    spec.service_name = get_str(obj, "service_name", "app.processes");
    const std::string where = "process '" + spec.service_name + "'";
    spec.behavior_id = get_str(obj, "behavior_id", where);
    if (obj.contains("init_params")) {
        const json &params = obj.at("init_params");
        if (!params.is_object())
            fail(where, "field 'init_params' must be an object");
        for (const auto &[key, value] : params.items()) {
            if (value.is_string())
                spec.init_params[key] = value.get<std::string>();
            else if (value.is_boolean())
                spec.init_params[key] = value.get<bool>() ? "true" : "false";
            else if (value.is_number())
                spec.init_params[key] = value.dump();
            else
                fail(where, "init_params values must be scalars");
        }
    }
    return spec;
}

runtime::AppDescriptor parse_app(const json &obj) {
    if (!obj.is_object())
        fail("app", "must be an object");
    runtime::AppDescriptor app;
    app.app_id = get_str(obj, "app_id", "app");
    try {
        app.channel_mode = net::channel_mode_from_string(
            get_str(obj, "channel_mode", "app"));
    } catch (const Error &e) {
        fail("app", e.what());
    }
    const json &processes = require(obj, "processes", "app");
    if (!processes.is_array() || processes.empty())
        fail("app", "field 'processes' must be a non-empty array");
    for (const json &p : processes)
        app.processes.push_back(parse_process(p));
    if (obj.contains("scaling")) {
        const json &s = obj.at("scaling");
        if (!s.is_object())
            fail("app.scaling", "must be an object");
        if (s.contains("trigger")) {
            try {
                app.scaling.trigger = runtime::scale_trigger_from_string(
                    get_str(s, "trigger", "app.scaling"));
            } catch (const Error &e) {
                fail("app.scaling", e.what());
            }
        }
        app.scaling.instances_per_trigger = static_cast<std::uint32_t>(
            get_u64_or(s, "instances_per_trigger",
                       app.scaling.instances_per_trigger, "app.scaling"));
        app.scaling.max_instances = static_cast<std::uint32_t>(get_u64_or(
            s, "max_instances", app.scaling.max_instances, "app.scaling"));
        app.scaling.startup_delay = get_u64_or(
            s, "startup_delay_us", app.scaling.startup_delay, "app.scaling");
    }
    return app;
}

} // namespace

Scenario parse_scenario(const std::string &json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error &e) {
        throw ParseError(std::string("scenario: invalid JSON: ") + e.what());
    }
    if (!doc.is_object())
        fail("document", "top level must be an object");

    Scenario sc;
    if (doc.contains("sim")) {
        const json &s = doc.at("sim");
        if (!s.is_object())
            fail("sim", "must be an object");
        sc.sim.rng_seed = get_u64_or(s, "rng_seed", sc.sim.rng_seed, "sim");
        sc.sim.horizon =
            VirtualTime{get_u64_or(s, "horizon_us", sc.sim.horizon.ticks,
                                   "sim")};
        sc.sim.trace_enabled =
            get_bool_or(s, "trace_enabled", sc.sim.trace_enabled, "sim");
    }
    if (doc.contains("fabric")) {
        const json &f = doc.at("fabric");
        if (!f.is_object())
            fail("fabric", "must be an object");
        sc.fabric.d_hop = get_u64_or(f, "d_hop_us", sc.fabric.d_hop, "fabric");
        sc.fabric.d_proxy =
            get_u64_or(f, "d_proxy_us", sc.fabric.d_proxy, "fabric");
        if (f.contains("drop_prob"))
            sc.fabric.drop_prob = get_f64(f, "drop_prob", "fabric");
        sc.fabric.rto = get_u64_or(f, "rto_us", sc.fabric.rto, "fabric");
        sc.fabric.max_attempts = static_cast<std::uint32_t>(get_u64_or(
            f, "max_attempts", sc.fabric.max_attempts, "fabric"));
    }
    if (doc.contains("sensors")) {
        const json &arr = doc.at("sensors");
        if (!arr.is_array())
            fail("sensors", "must be an array");
        for (const json &s : arr)
            sc.sensors.push_back(parse_sensor(s));
    }
    if (doc.contains("bindings")) {
        const json &arr = doc.at("bindings");
        if (!arr.is_array())
            fail("bindings", "must be an array");
        for (const json &b : arr) {
            if (!b.is_object())
                fail("bindings", "each binding must be an object");
            iot::PortBinding binding;
            binding.port = static_cast<std::uint32_t>(
                get_u64(b, "port", "bindings"));
            binding.sensor_id = get_str(b, "sensor_id", "bindings");
            binding.service_name = get_str(b, "service_name", "bindings");
            sc.bindings.push_back(binding);
        }
    }
    sc.app = parse_app(require(doc, "app", "document"));
    if (doc.contains("fire")) {
        const json &f = doc.at("fire");
        if (!f.is_object())
            fail("fire", "must be an object");
        if (f.contains("threshold_c"))
            sc.fire.threshold = get_f64(f, "threshold_c", "fire");
        sc.fire.reprogram_interval = get_u64_or(
            f, "reprogram_interval_us", sc.fire.reprogram_interval, "fire");
        sc.fire.alert_cooldown = get_u64_or(f, "alert_cooldown_us",
                                            sc.fire.alert_cooldown, "fire");
        if (f.contains("alert_target"))
            sc.fire.alert_target = get_str(f, "alert_target", "fire");
    }
    if (doc.contains("workload")) {
        const json &w = doc.at("workload");
        if (!w.is_object())
            fail("workload", "must be an object");
        WorkloadSpec spec;
        spec.msg_count = get_u64(w, "msg_count", "workload");
        spec.payload_bytes = static_cast<std::uint32_t>(
            get_u64_or(w, "payload_bytes", 0, "workload"));
        spec.interval = get_u64(w, "interval_us", "workload");
        if (spec.interval == 0)
            fail("workload", "interval_us must be > 0");
        sc.workload = spec;
    }
    return sc;
}

Scenario load_scenario_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("scenario: cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    Scenario sc = parse_scenario(buf.str());
    if (const char *env = std::getenv("CONCURPAAS_SEED")) {
        try {
            std::size_t used = 0;
            const std::string text(env);
            const std::uint64_t seed = std::stoull(text, &used);
            if (used != text.size())
                throw std::invalid_argument(text);
            sc.sim.rng_seed = seed;
        } catch (const std::exception &) {
            throw ParseError(
                "CONCURPAAS_SEED: not a valid unsigned integer: '" +
                std::string(env) + "'");
        }
    }
    return sc;
}

void validate_scenario(const Scenario &scenario,
                       const std::vector<std::string> &known_behaviors) {
    const std::set<std::string> behaviors(known_behaviors.begin(),
                                          known_behaviors.end());
    std::set<std::string> sensors;
    for (const iot::SensorSpec &s : scenario.sensors) {
        if (!sensors.insert(s.sensor_id).second)
            throw ValidationError("duplicate sensor_id '" + s.sensor_id +
                                  "'");
        if (s.sample_interval == 0)
            throw ValidationError("sensor '" + s.sensor_id +
                                  "': sample_interval_us must be > 0");
        for (std::size_t i = 1; i < s.trace.size(); ++i)
            if (s.trace[i].at <= s.trace[i - 1].at)
                throw ValidationError("sensor '" + s.sensor_id +
                                      "': trace times must strictly increase");
    }

    std::set<std::string> services;
    for (const runtime::ProcessSpec &p : scenario.app.processes)
        services.insert(p.service_name);

    bool has_detector = false;
    for (const runtime::ProcessSpec &p : scenario.app.processes) {
        if (!behaviors.count(p.behavior_id))
            throw ValidationError("process '" + p.service_name +
                                  "': unknown behavior '" + p.behavior_id +
                                  "'");
        if (p.behavior_id == "fire-detector")
            has_detector = true;
        if (p.behavior_id == "fire-manager") {
            const fire::FireManager::Options o =
                fire::FireManager::options_from(p);
            if (o.reprogram_enabled && !sensors.count(o.reprogram_target))
                throw ValidationError("process '" + p.service_name +
                                      "': reprogram target '" +
                                      o.reprogram_target +
                                      "' is not a scenario sensor");
            if (o.scale_enabled && !o.scale_service.empty() &&
                !services.count(o.scale_service))
                throw ValidationError("process '" + p.service_name +
                                      "': scale service '" + o.scale_service +
                                      "' is not an app service");
        }
    }

    const runtime::ScalePolicy &policy = scenario.app.scaling;
    if (policy.instances_per_trigger == 0 || policy.max_instances == 0 ||
        policy.instances_per_trigger > policy.max_instances)
        throw ValidationError(
            "app.scaling: need 1 <= instances_per_trigger <= max_instances");

    std::set<std::uint32_t> ports;
    std::set<std::string> bound_sensors;
    for (const iot::PortBinding &b : scenario.bindings) {
        if (!sensors.count(b.sensor_id))
            throw ValidationError("binding on port " +
                                  std::to_string(b.port) +
                                  ": unknown sensor '" + b.sensor_id + "'");
        if (!services.count(b.service_name))
            throw ValidationError("binding on port " +
                                  std::to_string(b.port) +
                                  ": unknown service '" + b.service_name +
                                  "'");
        if (!ports.insert(b.port).second)
            throw ValidationError("port " + std::to_string(b.port) +
                                  " is bound twice");
        if (!bound_sensors.insert(b.sensor_id).second)
            throw ValidationError("sensor '" + b.sensor_id +
                                  "' is bound to two ports");
    }

    if (has_detector && !services.count(scenario.fire.alert_target))
        throw ValidationError("fire.alert_target '" +
                              scenario.fire.alert_target +
                              "' is not an app service");
}

std::vector<std::string> builtin_behaviors() {
    return {"fire-detector", "fire-manager", "sink"};
}

} // namespace concurpaas::harness
