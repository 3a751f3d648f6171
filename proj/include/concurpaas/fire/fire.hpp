#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <concurpaas/iot/gateway.hpp>
#include <concurpaas/net/types.hpp>
#include <concurpaas/runtime/runtime.hpp>
#include <concurpaas/sim/time.hpp>

namespace concurpaas::fire {

struct FireConfig {
    double threshold = 50.0; // degrees Celsius, strict crossing
    std::string alert_target = "fire-mgr-B";
    Duration reprogram_interval = 100'000;
    Duration alert_cooldown = 10'000'000;
};

enum class FireEventKind {
    Crossed,
    AlertSent,
    AlertReceived,
    ReprogramSent,
    ReprogramApplied,
    ScaleRequested,
};

std::string to_string(FireEventKind kind);

struct FireEvent {
    VirtualTime at;
    FireEventKind kind;
    std::string detail;
};

// Append-only record of the detection pipeline, shared by both processes
// and the gateway hook. Entries arrive in event order.
class FireEventLog {
  public:
    void append(VirtualTime at, FireEventKind kind, std::string detail);
    const std::vector<FireEvent> &entries() const { return entries_; }
    std::optional<VirtualTime> first(FireEventKind kind) const;
    std::size_t count(FireEventKind kind) const;

    // CSV with header t_us,kind,detail.
    std::string to_csv() const;

  private:
    std::vector<FireEvent> entries_;
};

// first ReprogramApplied - first Crossed. Throws IncompleteScenario when
// either end of the chain is missing.
Duration end_to_end_reaction_time(const FireEventLog &log);

struct AlertBody {
    std::string sensor_id;
    double value = 0.0;
    VirtualTime measured_at;
};

std::vector<std::byte> encode_alert(const AlertBody &alert);
AlertBody decode_alert(const std::vector<std::byte> &body);

// Process A: watches temperature readings and raises one alert per
// cooldown window when the threshold is strictly exceeded. Light readings
// are recorded in the trace and otherwise ignored.
class FireDetector : public runtime::Behavior {
  public:
    FireDetector(FireConfig cfg, FireEventLog &log);

    void on_message(const net::NetMessage &msg,
                    runtime::BehaviorContext &ctx) override;

  private:
    FireConfig cfg_;
    FireEventLog &log_;
    std::optional<VirtualTime> last_alert_;
};

// Process B: reacts to an alert by reprogramming the paired sensor through
// the gateway and requesting another instance of its own service. Both
// reactions can be disabled per process via init_params.
class FireManager : public runtime::Behavior {
  public:
    struct Options {
        std::string reprogram_target = "sensor-B";
        bool reprogram_enabled = true;
        bool scale_enabled = true;
        std::string scale_service; // empty: the process's own service
    };

    FireManager(FireConfig cfg, FireEventLog &log, net::NetAddress gateway,
                Options options);

    // Reads Options overrides from a process spec's init_params.
    static Options options_from(const runtime::ProcessSpec &spec);

    void on_message(const net::NetMessage &msg,
                    runtime::BehaviorContext &ctx) override;

  private:
    FireConfig cfg_;
    FireEventLog &log_;
    net::NetAddress gateway_;
    Options options_;
};

} // namespace concurpaas::fire
