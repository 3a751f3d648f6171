#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <concurpaas/net/fabric.hpp>
#include <concurpaas/sim/engine.hpp>

namespace concurpaas::iot {

enum class SensorKind { Temperature, Light };

std::string to_string(SensorKind kind);
SensorKind sensor_kind_from_string(const std::string &s);

struct TracePoint {
    VirtualTime at;
    double value = 0.0;
};

struct SensorSpec {
    std::string sensor_id;
    SensorKind kind = SensorKind::Temperature;
    Duration sample_interval = 1'000'000; // > 0
    std::vector<TracePoint> trace;        // times strictly increasing
    bool enabled = true;
};

struct SensorReading {
    std::string sensor_id;
    SensorKind kind = SensorKind::Temperature;
    double value = 0.0;
    VirtualTime measured_at;
};

std::vector<std::byte> encode_reading(const SensorReading &r);
SensorReading decode_reading(const std::vector<std::byte> &body);

struct PortBinding {
    std::uint32_t port = 0;
    std::string sensor_id; // at most one binding per sensor
    std::string service_name;
};

struct ReprogramCommand {
    std::string target_sensor;
    std::optional<Duration> sample_interval;
    std::optional<bool> enabled;
    std::optional<std::vector<TracePoint>> trace_override;
};

std::vector<std::byte> encode_reprogram(const ReprogramCommand &cmd);
ReprogramCommand decode_reprogram(const std::vector<std::byte> &body);

// Effective parameters after a reprogram, echoed back to the caller.
struct SensorParams {
    Duration sample_interval = 0;
    bool enabled = false;
    std::size_t trace_points = 0;
};

// Value of a breakpoint trace at time t: the last breakpoint at or before
// t; the first breakpoint's value before any; 0.0 for an empty trace.
double sample_trace(const std::vector<TracePoint> &trace, VirtualTime t);

// Device edge of the platform. Sensors emit on their own cadence into the
// gateway, which buffers per port and forwards each reading to the bound
// service, resolving the instance per reading so freshly scaled instances
// receive traffic. Reprogram commands arrive over the fabric and hop on to
// the target sensor over the direct route.
class Gateway {
  public:
    using ReprogramApplied = std::function<void(
        const std::string &sensor_id, VirtualTime at, const SensorParams &)>;
    using ServiceLookup =
        std::function<std::optional<net::NetAddress>(const std::string &)>;

    Gateway(sim::Engine &engine, net::Fabric &fabric, ServiceLookup lookup,
            std::size_t port_capacity = 1024);

    net::NetAddress address() const { return address_; }

    // Channel mode used when forwarding readings to processes.
    void set_channel_mode(net::ChannelMode mode) { forward_mode_ = mode; }

    // Registers the sensor, allocates its fabric interface, and schedules
    // the first emission one interval out (when enabled).
    void create_sensor(const SensorSpec &spec);

    void bind_port(std::uint32_t port, const std::string &sensor_id,
                   const std::string &service_name);

    // Buffers the reading on the sensor's port and forwards it to the
    // bound service. Unbound sensors drop the reading with a trace notice;
    // unresolvable services keep the buffered copy only.
    void ingest(const SensorReading &reading);

    // Applies the listed parameters to the target sensor and reschedules
    // its next emission. Throws UnknownSensor / InvalidParam.
    SensorParams apply_reprogram(const ReprogramCommand &cmd);

    void set_reprogram_applied_hook(ReprogramApplied hook);

    const std::deque<SensorReading> &port_buffer(std::uint32_t port) const;
    const std::vector<SensorReading> &emissions(const std::string &sensor_id) const;
    SensorParams sensor_params(const std::string &sensor_id) const;
    net::NetAddress sensor_address(const std::string &sensor_id) const;
    std::vector<PortBinding> bindings() const;

  private:
    struct Sensor {
        SensorSpec spec;
        net::NetAddress address;
        sim::EventId next_emit = 0;
        std::vector<SensorReading> emitted;
    };

    void on_gateway_event_(const sim::SimEvent &ev);
    void on_gateway_message_(const net::NetMessage &msg);
    void on_sensor_event_(const std::string &sensor_id,
                          const sim::SimEvent &ev);
    void on_sensor_message_(const std::string &sensor_id,
                            const net::NetMessage &msg);
    void emit_(Sensor &s);
    void schedule_emit_(Sensor &s);
    Sensor &sensor_(const std::string &sensor_id);
    const Sensor &sensor_(const std::string &sensor_id) const;

    sim::Engine &engine_;
    net::Fabric &fabric_;
    ServiceLookup lookup_;
    std::size_t port_capacity_;
    net::NetAddress address_;
    net::ChannelMode forward_mode_ = net::ChannelMode::Direct;
    std::map<std::string, Sensor> sensors_;
    std::map<std::uint32_t, PortBinding> ports_;
    std::map<std::string, std::uint32_t> port_of_sensor_;
    std::map<std::uint32_t, std::deque<SensorReading>> buffers_;
    ReprogramApplied on_applied_;
};

} // namespace concurpaas::iot
