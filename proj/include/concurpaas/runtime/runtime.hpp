#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <concurpaas/net/fabric.hpp>
#include <concurpaas/registry/registry.hpp>
#include <concurpaas/sim/engine.hpp>

namespace concurpaas::runtime {

struct ProcessSpec {
    std::string service_name;
    std::string behavior_id;
    std::map<std::string, std::string> init_params;
};

enum class ScaleTrigger { OnAlert, Manual };

std::string to_string(ScaleTrigger trigger);
ScaleTrigger scale_trigger_from_string(const std::string &s);

struct ScalePolicy {
    ScaleTrigger trigger = ScaleTrigger::OnAlert;
    std::uint32_t instances_per_trigger = 1;
    std::uint32_t max_instances = 1;
    Duration startup_delay = 50'000;
};

struct AppDescriptor {
    std::string app_id;
    std::vector<ProcessSpec> processes;
    net::ChannelMode channel_mode = net::ChannelMode::Direct;
    ScalePolicy scaling;
};

enum class ContainerState { Deploying, Running, Stopped };

std::string to_string(ContainerState state);

struct ContainerHandle {
    std::string container_id; // "<app_id>/<instance_id>"
    std::string app_id;
    std::string instance_id; // "<service_name>-<k>", k deterministic
    ProcessSpec process;
    net::NetAddress address;
    ContainerState state = ContainerState::Deploying;
};

class BehaviorContext;

// Application logic hosted in a container. Callbacks run inside the event
// that triggered them; anything they cause happens via further scheduling.
class Behavior {
  public:
    virtual ~Behavior() = default;
    virtual void on_start(BehaviorContext &ctx) { (void)ctx; }
    virtual void on_message(const net::NetMessage &msg,
                            BehaviorContext &ctx) = 0;
};

using BehaviorFactory =
    std::function<std::unique_ptr<Behavior>(const ProcessSpec &)>;

class BehaviorCatalog {
  public:
    void add(const std::string &behavior_id, BehaviorFactory factory);
    bool contains(const std::string &behavior_id) const;
    std::unique_ptr<Behavior> make(const ProcessSpec &spec) const;

  private:
    std::map<std::string, BehaviorFactory> factories_;
};

class ElasticRuntime;

// Capabilities handed to a behavior callback. Service sends go through a
// channel opened on first use and cached; the binding survives scale-out
// until the application explicitly rebinds.
class BehaviorContext {
  public:
    BehaviorContext(ElasticRuntime &rt, const std::string &container_id);

    VirtualTime now() const;
    const ContainerHandle &self() const;
    std::string init_param(const std::string &key,
                           const std::string &fallback) const;

    // Returns the msg_id, or nullopt (with a trace notice) when the
    // service has no live instance yet.
    std::optional<std::uint64_t> send_to_service(const std::string &service,
                                                 net::MsgKind kind,
                                                 std::vector<std::byte> body);

    // Platform-path send to a fixed endpoint over the direct route.
    std::uint64_t send_to_address(net::NetAddress dst, net::MsgKind kind,
                                  std::vector<std::byte> body);

    // Drops the cached channel for a service; the next send re-resolves.
    void rebind_service(const std::string &service);

    std::vector<ContainerHandle> request_scale_out(const std::string &service);

    // Zero-delay notice event addressed to this container.
    void annotate(const std::string &kind);

  private:
    ElasticRuntime &rt_;
    std::string container_id_;
};

struct RuntimeStats {
    std::uint64_t dead_letters = 0;
    std::uint64_t at_capacity_hits = 0;
    std::uint64_t behavior_errors = 0;
    std::uint64_t sends_skipped = 0;
};

// Deploys one container per process, registers it after the startup delay,
// keeps its lease renewed while Running, and grows services on alerts up
// to the policy cap.
class ElasticRuntime {
  public:
    ElasticRuntime(sim::Engine &engine, net::Fabric &fabric,
                   registry::ServiceRegistry &registry,
                   BehaviorCatalog catalog);

    std::vector<ContainerHandle> deploy(const AppDescriptor &app);

    // Adds instances of one service. OnAlert policies log and return empty
    // at the cap; Manual policies throw AtCapacity instead.
    std::vector<ContainerHandle> scale_out(const std::string &app_id,
                                           const std::string &service_name);

    // Stops every container of the app, deregistering the running ones.
    // Returns how many containers this call transitioned to Stopped.
    std::size_t stop_app(const std::string &app_id);

    // Fabric delivery entry point. Running containers get the message;
    // anything else becomes a dead-letter notice.
    void deliver_to_process(const std::string &container_id,
                            const net::NetMessage &msg);

    const ContainerHandle &container(const std::string &container_id) const;
    std::vector<ContainerHandle> containers(const std::string &app_id) const;
    std::vector<std::string> running_instances() const; // all apps, sorted
    const AppDescriptor &descriptor(const std::string &app_id) const;
    const RuntimeStats &stats() const { return stats_; }

  private:
    friend class BehaviorContext;

    struct Container {
        ContainerHandle handle;
        std::unique_ptr<Behavior> behavior;
        sim::EventId start_event = 0;
        sim::EventId heartbeat_event = 0;
        std::map<std::string, net::ChannelId> channels; // service -> channel
    };

    struct App {
        AppDescriptor descriptor;
        std::vector<std::string> container_ids;
        std::map<std::string, std::uint32_t> next_ordinal; // per service
    };

    Container &spawn_(App &app, const ProcessSpec &spec);
    void on_container_event_(const std::string &container_id,
                             const sim::SimEvent &ev);
    void on_started_(Container &c);
    void on_heartbeat_(Container &c);
    Container &container_ref_(const std::string &container_id);
    std::size_t live_count_(const App &app,
                            const std::string &service_name) const;

    sim::Engine &engine_;
    net::Fabric &fabric_;
    registry::ServiceRegistry &registry_;
    BehaviorCatalog catalog_;
    std::map<std::string, App> apps_;
    std::map<std::string, Container> containers_;
    RuntimeStats stats_;
};

} // namespace concurpaas::runtime
