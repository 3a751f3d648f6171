#include <concurpaas/iot/gateway.hpp>

#include <sstream>
#include <utility>

#include <concurpaas/errors.hpp>
#include <concurpaas/wire.hpp>

namespace concurpaas::iot {

namespace {

constexpr const char *kGatewayId = "gateway";
constexpr const char *kEmit = "Emit";
constexpr const char *kApplyReprogram = "ApplyReprogram";

std::string sensor_component(const std::string &sensor_id) {
    return "sensor/" + sensor_id;
}

void check_trace(const std::vector<TracePoint> &trace) {
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i].at <= trace[i - 1].at)
            throw InvalidParam("sensor trace times must strictly increase");
}

} // namespace

std::string to_string(SensorKind kind) {
    return kind == SensorKind::Temperature ? "Temperature" : "Light";
}

SensorKind sensor_kind_from_string(const std::string &s) {
    if (s == "Temperature")
        return SensorKind::Temperature;
    if (s == "Light")
        return SensorKind::Light;
    throw Error("unknown sensor kind '" + s + "'");
}

std::vector<std::byte> encode_reading(const SensorReading &r) {
    wire::Writer w;
    w.str(r.sensor_id);
    w.u8(r.kind == SensorKind::Temperature ? 0 : 1);
    w.f64(r.value);
    w.u64(r.measured_at.ticks);
    return w.take();
}

SensorReading decode_reading(const std::vector<std::byte> &body) {
    wire::Reader r(body);
    SensorReading out;
    out.sensor_id = r.str();
    out.kind = r.u8() == 0 ? SensorKind::Temperature : SensorKind::Light;
    out.value = r.f64();
    out.measured_at = VirtualTime{r.u64()};
    return out;
}

std::vector<std::byte> encode_reprogram(const ReprogramCommand &cmd) {
    wire::Writer w;
    w.str(cmd.target_sensor);
    w.u8(cmd.sample_interval.has_value() ? 1 : 0);
    if (cmd.sample_interval)
        w.u64(*cmd.sample_interval);
    w.u8(cmd.enabled.has_value() ? 1 : 0);
    if (cmd.enabled)
        w.u8(*cmd.enabled ? 1 : 0);
    w.u8(cmd.trace_override.has_value() ? 1 : 0);
    if (cmd.trace_override) {
        w.u32(static_cast<std::uint32_t>(cmd.trace_override->size()));
        for (const TracePoint &p : *cmd.trace_override) {
            w.u64(p.at.ticks);
            w.f64(p.value);
        }
    }
    return w.take();
}

ReprogramCommand decode_reprogram(const std::vector<std::byte> &body) {
    wire::Reader r(body);
    ReprogramCommand cmd;
    cmd.target_sensor = r.str();
    if (r.u8())
        cmd.sample_interval = r.u64();
    if (r.u8())
        cmd.enabled = r.u8() != 0;
    if (r.u8()) {
        std::vector<TracePoint> trace;
        const std::uint32_t n = r.u32();
        trace.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            TracePoint p;
            p.at = VirtualTime{r.u64()};
            p.value = r.f64();
            trace.push_back(p);
        }
        cmd.trace_override = std::move(trace);
    }
    return cmd;
}

double sample_trace(const std::vector<TracePoint> &trace, VirtualTime t) {
    if (trace.empty())
        return 0.0;
    double value = trace.front().value;
    for (const TracePoint &p : trace) {
        if (p.at > t)
            break;
        value = p.value;
    }
    return value;
}

Gateway::Gateway(sim::Engine &engine, net::Fabric &fabric,
                 ServiceLookup lookup, std::size_t port_capacity)
    : engine_(engine), fabric_(fabric), lookup_(std::move(lookup)),
      port_capacity_(port_capacity) {
    if (port_capacity_ == 0)
        throw Error("gateway: port capacity must be > 0");
    address_ = fabric_.allocate_interface(kGatewayId);
    fabric_.attach_receiver(
        address_, [this](const net::NetMessage &msg) { on_gateway_message_(msg); });
    engine_.attach(kGatewayId,
                   [this](const sim::SimEvent &ev) { on_gateway_event_(ev); });
}

void Gateway::create_sensor(const SensorSpec &spec) {
    if (spec.sensor_id.empty())
        throw Error("create_sensor: sensor_id must be non-empty");
    if (sensors_.count(spec.sensor_id))
        throw DuplicateSensor("create_sensor: '" + spec.sensor_id +
                              "' already exists");
    if (spec.sample_interval == 0)
        throw InvalidParam("create_sensor: sample_interval must be > 0");
    check_trace(spec.trace);

    Sensor s;
    s.spec = spec;
    s.address = fabric_.allocate_interface(sensor_component(spec.sensor_id));
    auto [it, inserted] = sensors_.emplace(spec.sensor_id, std::move(s));
    (void)inserted;
    Sensor &stored = it->second;

    const std::string id = spec.sensor_id;
    engine_.attach(sensor_component(id), [this, id](const sim::SimEvent &ev) {
        on_sensor_event_(id, ev);
    });
    fabric_.attach_receiver(stored.address,
                            [this, id](const net::NetMessage &msg) {
                                on_sensor_message_(id, msg);
                            });
    if (stored.spec.enabled)
        schedule_emit_(stored);
}

void Gateway::bind_port(std::uint32_t port, const std::string &sensor_id,
                        const std::string &service_name) {
    if (!sensors_.count(sensor_id))
        throw UnknownSensor("bind_port: no sensor '" + sensor_id + "'");
    if (ports_.count(port))
        throw PortInUse("bind_port: port " + std::to_string(port) +
                        " is already bound");
    if (port_of_sensor_.count(sensor_id))
        throw Error("bind_port: sensor '" + sensor_id +
                    "' is already bound to port " +
                    std::to_string(port_of_sensor_[sensor_id]));
    ports_.emplace(port, PortBinding{port, sensor_id, service_name});
    port_of_sensor_.emplace(sensor_id, port);
    buffers_[port];
}

void Gateway::ingest(const SensorReading &reading) {
    auto bound = port_of_sensor_.find(reading.sensor_id);
    if (bound == port_of_sensor_.end()) {
        engine_.schedule(0, kGatewayId, "Unbound:" + reading.sensor_id);
        return;
    }
    const PortBinding &binding = ports_.at(bound->second);
    std::deque<SensorReading> &buf = buffers_[binding.port];
    buf.push_back(reading);
    if (buf.size() > port_capacity_)
        buf.pop_front(); // ring: newest wins

    const auto endpoint = lookup_(binding.service_name);
    if (!endpoint) {
        engine_.schedule(0, kGatewayId,
                         "ForwardSkipped:" + reading.sensor_id);
        return;
    }
    fabric_.send_message(address_, *endpoint, forward_mode_,
                         net::MsgKind::Reading, encode_reading(reading));
}

SensorParams Gateway::apply_reprogram(const ReprogramCommand &cmd) {
    Sensor &s = sensor_(cmd.target_sensor);
    if (!cmd.sample_interval && !cmd.enabled && !cmd.trace_override)
        throw InvalidParam("apply_reprogram: command lists no parameters");
    if (cmd.sample_interval && *cmd.sample_interval == 0)
        throw InvalidParam("apply_reprogram: sample_interval must be > 0");
    if (cmd.trace_override)
        check_trace(*cmd.trace_override);

    if (cmd.sample_interval)
        s.spec.sample_interval = *cmd.sample_interval;
    if (cmd.enabled)
        s.spec.enabled = *cmd.enabled;
    if (cmd.trace_override)
        s.spec.trace = *cmd.trace_override;

    // Whatever was pending belongs to the old parameters.
    if (s.next_emit != 0) {
        engine_.cancel(s.next_emit);
        s.next_emit = 0;
    }
    if (s.spec.enabled)
        schedule_emit_(s);

    const SensorParams params{s.spec.sample_interval, s.spec.enabled,
                              s.spec.trace.size()};
    if (on_applied_)
        on_applied_(cmd.target_sensor, engine_.now(), params);
    return params;
}

void Gateway::set_reprogram_applied_hook(ReprogramApplied hook) {
    on_applied_ = std::move(hook);
}

const std::deque<SensorReading> &
Gateway::port_buffer(std::uint32_t port) const {
    auto it = buffers_.find(port);
    if (it == buffers_.end())
        throw Error("port_buffer: port " + std::to_string(port) +
                    " is not bound");
    return it->second;
}

const std::vector<SensorReading> &
Gateway::emissions(const std::string &sensor_id) const {
    return sensor_(sensor_id).emitted;
}

SensorParams Gateway::sensor_params(const std::string &sensor_id) const {
    const Sensor &s = sensor_(sensor_id);
    return SensorParams{s.spec.sample_interval, s.spec.enabled,
                        s.spec.trace.size()};
}

net::NetAddress Gateway::sensor_address(const std::string &sensor_id) const {
    return sensor_(sensor_id).address;
}

std::vector<PortBinding> Gateway::bindings() const {
    std::vector<PortBinding> out;
    for (const auto &[port, binding] : ports_)
        out.push_back(binding);
    return out;
}

void Gateway::on_gateway_event_(const sim::SimEvent &ev) {
    if (ev.kind == kApplyReprogram)
        apply_reprogram(decode_reprogram(ev.payload));
    // Notices (unbound sensors, skipped forwards, delivery failures) are
    // trace-only.
}

void Gateway::on_gateway_message_(const net::NetMessage &msg) {
    if (msg.kind != net::MsgKind::Reprogram)
        return;
    const ReprogramCommand cmd = decode_reprogram(msg.body);
    auto it = sensors_.find(cmd.target_sensor);
    if (it == sensors_.end()) {
        engine_.schedule(0, kGatewayId,
                         "ReprogramRejected:" + cmd.target_sensor);
        return;
    }
    // One direct hop on to the device.
    fabric_.send_message(address_, it->second.address,
                         net::ChannelMode::Direct, net::MsgKind::Reprogram,
                         encode_reprogram(cmd));
}

void Gateway::on_sensor_event_(const std::string &sensor_id,
                               const sim::SimEvent &ev) {
    if (ev.kind == kEmit) {
        Sensor &s = sensor_(sensor_id);
        s.next_emit = 0;
        emit_(s);
    }
}

void Gateway::on_sensor_message_(const std::string &sensor_id,
                                 const net::NetMessage &msg) {
    if (msg.kind != net::MsgKind::Reprogram)
        return;
    ReprogramCommand cmd = decode_reprogram(msg.body);
    cmd.target_sensor = sensor_id; // the addressed device applies it
    apply_reprogram(cmd);
}

void Gateway::emit_(Sensor &s) {
    if (!s.spec.enabled)
        return;
    SensorReading reading;
    reading.sensor_id = s.spec.sensor_id;
    reading.kind = s.spec.kind;
    reading.value = sample_trace(s.spec.trace, engine_.now());
    reading.measured_at = engine_.now();
    s.emitted.push_back(reading);
    ingest(reading);
    schedule_emit_(s);
}

void Gateway::schedule_emit_(Sensor &s) {
    if (engine_.within_horizon(s.spec.sample_interval))
        s.next_emit = engine_.schedule(s.spec.sample_interval,
                                       sensor_component(s.spec.sensor_id),
                                       kEmit);
    else
        s.next_emit = 0;
}

Gateway::Sensor &Gateway::sensor_(const std::string &sensor_id) {
    auto it = sensors_.find(sensor_id);
    if (it == sensors_.end())
        throw UnknownSensor("no sensor '" + sensor_id + "'");
    return it->second;
}

const Gateway::Sensor &Gateway::sensor_(const std::string &sensor_id) const {
    auto it = sensors_.find(sensor_id);
    if (it == sensors_.end())
        throw UnknownSensor("no sensor '" + sensor_id + "'");
    return it->second;
}

} // namespace concurpaas::iot
