#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <concurpaas/fire/fire.hpp>
#include <concurpaas/harness/scenario.hpp>
#include <concurpaas/iot/gateway.hpp>
#include <concurpaas/net/fabric.hpp>
#include <concurpaas/registry/registry.hpp>
#include <concurpaas/runtime/runtime.hpp>
#include <concurpaas/sim/engine.hpp>

namespace concurpaas::harness {

// Synthetic traffic source: one message every interval until msg_count is
// reached, addressed past the registry so load stays independent of
// service discovery.
class WorkloadDriver {
  public:
    WorkloadDriver(sim::Engine &engine, net::Fabric &fabric,
                   const WorkloadSpec &spec, net::ChannelMode mode);

    std::uint64_t sent() const { return sent_; }
    std::uint64_t received() const { return received_; }

  private:
    void on_tick_();

    sim::Engine &engine_;
    net::Fabric &fabric_;
    WorkloadSpec spec_;
    net::ChannelMode mode_;
    net::NetAddress src_;
    net::NetAddress sink_;
    std::uint64_t sent_ = 0;
    std::uint64_t received_ = 0;
};

// The assembled platform for one scenario: engine, discovery, fabric,
// device edge, runtime with the built-in behavior catalog, and optional
// synthetic load. Construction deploys the app and preps the sensors; the
// caller decides how far to run.
struct World {
    explicit World(const Scenario &scenario);

    sim::Engine engine;
    registry::ServiceRegistry registry;
    net::Fabric fabric;
    iot::Gateway gateway;
    fire::FireEventLog fire_log;
    runtime::ElasticRuntime rt;
    std::optional<WorkloadDriver> workload;

  private:
    runtime::BehaviorCatalog build_catalog_(const Scenario &scenario);
};

} // namespace concurpaas::harness
