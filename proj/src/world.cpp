#include <concurpaas/harness/world.hpp>

#include <memory>

namespace concurpaas::harness {

namespace {

// Discards everything; lets scenarios deploy services that only receive.
class SinkBehavior : public runtime::Behavior {
  public:
    void on_message(const net::NetMessage &,
                    runtime::BehaviorContext &) override {}
};

} // namespace

WorkloadDriver::WorkloadDriver(sim::Engine &engine, net::Fabric &fabric,
                               const WorkloadSpec &spec, net::ChannelMode mode)
    : engine_(engine), fabric_(fabric), spec_(spec), mode_(mode) {
    src_ = fabric_.allocate_interface("load/src");
    sink_ = fabric_.allocate_interface("load/sink");
    engine_.attach("load/src", [this](const sim::SimEvent &ev) {
        if (ev.kind == "SendTick")
            on_tick_();
    });
    engine_.attach("load/sink", [](const sim::SimEvent &) {});
    fabric_.attach_receiver(
        sink_, [this](const net::NetMessage &) { received_ += 1; });
    if (spec_.msg_count > 0 && engine_.within_horizon(spec_.interval))
        engine_.schedule(spec_.interval, "load/src", "SendTick");
}

void WorkloadDriver::on_tick_() {
    fabric_.send_message(src_, sink_, mode_, net::MsgKind::Custom,
                         std::vector<std::byte>(spec_.payload_bytes));
    sent_ += 1;
    if (sent_ < spec_.msg_count && engine_.within_horizon(spec_.interval))
        engine_.schedule(spec_.interval, "load/src", "SendTick");
}

World::World(const Scenario &scenario)
    : engine(scenario.sim),
      registry(engine, registry::RegistryConfig{},
               [this](net::NetAddress a) { return fabric.is_allocated(a); }),
      fabric(engine, scenario.fabric,
             [this](const std::string &svc) { return registry.lookup(svc); }),
      gateway(engine, fabric,
              [this](const std::string &svc) { return registry.try_lookup(svc); }),
      rt(engine, fabric, registry, build_catalog_(scenario)) {
    registry.start_evictor();
    gateway.set_channel_mode(scenario.app.channel_mode);
    gateway.set_reprogram_applied_hook(
        [this](const std::string &sensor_id, VirtualTime at,
               const iot::SensorParams &) {
            fire_log.append(at, fire::FireEventKind::ReprogramApplied,
                            sensor_id);
        });
    for (const iot::SensorSpec &s : scenario.sensors)
        gateway.create_sensor(s);
    for (const iot::PortBinding &b : scenario.bindings)
        gateway.bind_port(b.port, b.sensor_id, b.service_name);
    rt.deploy(scenario.app);
    if (scenario.workload)
        workload.emplace(engine, fabric, *scenario.workload,
                         scenario.app.channel_mode);
}

runtime::BehaviorCatalog World::build_catalog_(const Scenario &scenario) {
    runtime::BehaviorCatalog catalog;
    const fire::FireConfig cfg = scenario.fire;
    catalog.add("fire-detector", [this, cfg](const runtime::ProcessSpec &spec) {
        fire::FireConfig mine = cfg;
        auto it = spec.init_params.find("alert_target");
        if (it != spec.init_params.end())
            mine.alert_target = it->second;
        return std::make_unique<fire::FireDetector>(mine, fire_log);
    });
    catalog.add("fire-manager", [this, cfg](const runtime::ProcessSpec &spec) {
        return std::make_unique<fire::FireManager>(
            cfg, fire_log, gateway.address(),
            fire::FireManager::options_from(spec));
    });
    catalog.add("sink", [](const runtime::ProcessSpec &) {
        return std::make_unique<SinkBehavior>();
    });
    return catalog;
}

} // namespace concurpaas::harness
