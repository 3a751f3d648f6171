#include <concurpaas/runtime/runtime.hpp>

#include <algorithm>
#include <sstream>
#include <utility>

#include <concurpaas/errors.hpp>

namespace concurpaas::runtime {

namespace {

constexpr const char *kStarted = "Started";
constexpr const char *kHeartbeat = "Heartbeat";

} // namespace

std::string to_string(ScaleTrigger trigger) {
    return trigger == ScaleTrigger::OnAlert ? "OnAlert" : "Manual";
}

ScaleTrigger scale_trigger_from_string(const std::string &s) {
    if (s == "OnAlert")
        return ScaleTrigger::OnAlert;
    if (s == "Manual")
        return ScaleTrigger::Manual;
    throw Error("unknown scale trigger '" + s + "'");
}

std::string to_string(ContainerState state) {
    switch (state) {
    case ContainerState::Deploying:
        return "Deploying";
    case ContainerState::Running:
        return "Running";
    case ContainerState::Stopped:
        return "Stopped";
    }
    return "Stopped";
}

void BehaviorCatalog::add(const std::string &behavior_id,
                          BehaviorFactory factory) {
    if (!factory)
        throw Error("catalog: empty factory for '" + behavior_id + "'");
    auto [it, inserted] = factories_.emplace(behavior_id, std::move(factory));
    (void)it;
    if (!inserted)
        throw Error("catalog: behavior '" + behavior_id +
                    "' registered twice");
}

bool BehaviorCatalog::contains(const std::string &behavior_id) const {
    return factories_.count(behavior_id) != 0;
}

std::unique_ptr<Behavior> BehaviorCatalog::make(const ProcessSpec &spec) const {
    auto it = factories_.find(spec.behavior_id);
    if (it == factories_.end())
        throw UnknownBehavior("catalog: no behavior '" + spec.behavior_id +
                              "'");
    return it->second(spec);
}

// ---- BehaviorContext ----

BehaviorContext::BehaviorContext(ElasticRuntime &rt,
                                 const std::string &container_id)
    : rt_(rt), container_id_(container_id) {}

VirtualTime BehaviorContext::now() const { return rt_.engine_.now(); }

const ContainerHandle &BehaviorContext::self() const {
    return rt_.container(container_id_);
}

std::string BehaviorContext::init_param(const std::string &key,
                                        const std::string &fallback) const {
    const auto &params = self().process.init_params;
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

std::optional<std::uint64_t>
BehaviorContext::send_to_service(const std::string &service,
                                 net::MsgKind kind,
                                 std::vector<std::byte> body) {
    auto &c = rt_.container_ref_(container_id_);
    auto cached = c.channels.find(service);
    if (cached == c.channels.end()) {
        try {
            const net::ChannelId ch = rt_.fabric_.open_channel(
                c.handle.address, service,
                rt_.descriptor(c.handle.app_id).channel_mode);
            cached = c.channels.emplace(service, ch).first;
        } catch (const NotFound &) {
            rt_.stats_.sends_skipped += 1;
            rt_.engine_.schedule(0, container_id_, "SendSkipped:" + service);
            return std::nullopt;
        }
    }
    return rt_.fabric_.send(cached->second, kind, std::move(body));
}

std::uint64_t BehaviorContext::send_to_address(net::NetAddress dst,
                                               net::MsgKind kind,
                                               std::vector<std::byte> body) {
    const auto &c = rt_.container(container_id_);
    return rt_.fabric_.send_message(c.address, dst, net::ChannelMode::Direct,
                                    kind, std::move(body));
}

void BehaviorContext::rebind_service(const std::string &service) {
    rt_.container_ref_(container_id_).channels.erase(service);
}

std::vector<ContainerHandle>
BehaviorContext::request_scale_out(const std::string &service) {
    return rt_.scale_out(self().app_id, service);
}

void BehaviorContext::annotate(const std::string &kind) {
    rt_.engine_.schedule(0, container_id_, kind);
}

// ---- ElasticRuntime ----

ElasticRuntime::ElasticRuntime(sim::Engine &engine, net::Fabric &fabric,
                               registry::ServiceRegistry &registry,
                               BehaviorCatalog catalog)
    : engine_(engine), fabric_(fabric), registry_(registry),
      catalog_(std::move(catalog)) {
    // Notices addressed to the runtime as a whole (capacity hits) land here.
    engine_.attach("runtime", [](const sim::SimEvent &) {});
}

std::vector<ContainerHandle> ElasticRuntime::deploy(const AppDescriptor &app) {
    if (app.app_id.empty())
        throw Error("deploy: app_id must be non-empty");
    if (app.processes.empty())
        throw Error("deploy: descriptor lists no processes");
    if (apps_.count(app.app_id))
        throw DuplicateApp("deploy: app '" + app.app_id +
                           "' is already deployed");
    if (app.scaling.instances_per_trigger == 0 ||
        app.scaling.max_instances == 0)
        throw Error("deploy: scaling counts must be >= 1");
    for (const ProcessSpec &spec : app.processes) {
        if (!catalog_.contains(spec.behavior_id))
            throw UnknownBehavior("deploy: no behavior '" + spec.behavior_id +
                                  "' for service '" + spec.service_name +
                                  "'");
    }

    App &state = apps_.emplace(app.app_id, App{app, {}, {}}).first->second;
    std::vector<ContainerHandle> handles;
    for (const ProcessSpec &spec : app.processes)
        handles.push_back(spawn_(state, spec).handle);
    return handles;
}

ElasticRuntime::Container &ElasticRuntime::spawn_(App &app,
                                                  const ProcessSpec &spec) {
    std::uint32_t &ordinal = app.next_ordinal[spec.service_name];
    ordinal += 1;
    std::ostringstream inst;
    inst << spec.service_name << '-' << ordinal;

    ContainerHandle handle;
    handle.app_id = app.descriptor.app_id;
    handle.instance_id = inst.str();
    handle.container_id = handle.app_id + "/" + handle.instance_id;
    handle.process = spec;
    handle.state = ContainerState::Deploying;
    handle.address = fabric_.allocate_interface(handle.container_id);

    Container c;
    c.handle = handle;
    c.behavior = catalog_.make(spec);
    auto [it, inserted] =
        containers_.emplace(handle.container_id, std::move(c));
    (void)inserted;
    Container &stored = it->second;
    app.container_ids.push_back(handle.container_id);

    const std::string cid = handle.container_id;
    engine_.attach(cid, [this, cid](const sim::SimEvent &ev) {
        on_container_event_(cid, ev);
    });
    fabric_.attach_receiver(handle.address, [this, cid](
                                                const net::NetMessage &msg) {
        deliver_to_process(cid, msg);
    });
    stored.start_event = engine_.schedule(app.descriptor.scaling.startup_delay,
                                          cid, kStarted);
    return stored;
}

void ElasticRuntime::on_container_event_(const std::string &container_id,
                                         const sim::SimEvent &ev) {
    Container &c = container_ref_(container_id);
    if (ev.kind == kStarted)
        on_started_(c);
    else if (ev.kind == kHeartbeat)
        on_heartbeat_(c);
    // Notices (dead letters, skipped sends, delivery failures) need no
    // action here; they exist for the trace.
}

void ElasticRuntime::on_started_(Container &c) {
    if (c.handle.state != ContainerState::Deploying)
        return;
    c.start_event = 0;
    registry_.register_instance(c.handle.process.service_name,
                                c.handle.instance_id, c.handle.address);
    c.handle.state = ContainerState::Running;
    const Duration beat = registry_.config().lease_duration / 2;
    if (engine_.within_horizon(beat))
        c.heartbeat_event =
            engine_.schedule(beat, c.handle.container_id, kHeartbeat);
    BehaviorContext ctx(*this, c.handle.container_id);
    try {
        c.behavior->on_start(ctx);
    } catch (const Error &) {
        stats_.behavior_errors += 1;
        engine_.schedule(0, c.handle.container_id, "BehaviorError:start");
    }
}

void ElasticRuntime::on_heartbeat_(Container &c) {
    if (c.handle.state != ContainerState::Running)
        return;
    registry_.renew(c.handle.process.service_name, c.handle.instance_id);
    const Duration beat = registry_.config().lease_duration / 2;
    if (engine_.within_horizon(beat))
        c.heartbeat_event =
            engine_.schedule(beat, c.handle.container_id, kHeartbeat);
    else
        c.heartbeat_event = 0;
}

std::vector<ContainerHandle>
ElasticRuntime::scale_out(const std::string &app_id,
                          const std::string &service_name) {
    auto it = apps_.find(app_id);
    if (it == apps_.end())
        throw UnknownApp("scale_out: no app '" + app_id + "'");
    App &app = it->second;

    const ProcessSpec *spec = nullptr;
    for (const ProcessSpec &p : app.descriptor.processes)
        if (p.service_name == service_name)
            spec = &p;
    if (!spec)
        throw Error("scale_out: app '" + app_id + "' has no service '" +
                    service_name + "'");

    const ScalePolicy &policy = app.descriptor.scaling;
    const std::size_t live = live_count_(app, service_name);
    if (live >= policy.max_instances) {
        stats_.at_capacity_hits += 1;
        if (policy.trigger == ScaleTrigger::Manual)
            throw AtCapacity("scale_out: service '" + service_name +
                             "' is at max_instances=" +
                             std::to_string(policy.max_instances));
        engine_.schedule(0, "runtime", "AtCapacity:" + service_name);
        return {};
    }
    const std::size_t want =
        std::min<std::size_t>(policy.instances_per_trigger,
                              policy.max_instances - live);
    std::vector<ContainerHandle> handles;
    for (std::size_t i = 0; i < want; ++i)
        handles.push_back(spawn_(app, *spec).handle);
    return handles;
}

std::size_t ElasticRuntime::stop_app(const std::string &app_id) {
    auto it = apps_.find(app_id);
    if (it == apps_.end())
        throw UnknownApp("stop_app: no app '" + app_id + "'");
    std::size_t stopped = 0;
    for (const std::string &cid : it->second.container_ids) {
        Container &c = container_ref_(cid);
        if (c.handle.state == ContainerState::Stopped)
            continue;
        if (c.start_event != 0) {
            engine_.cancel(c.start_event);
            c.start_event = 0;
        }
        if (c.heartbeat_event != 0) {
            engine_.cancel(c.heartbeat_event);
            c.heartbeat_event = 0;
        }
        if (c.handle.state == ContainerState::Running)
            registry_.deregister(c.handle.process.service_name,
                                 c.handle.instance_id);
        c.handle.state = ContainerState::Stopped;
        ++stopped;
    }
    return stopped;
}

void ElasticRuntime::deliver_to_process(const std::string &container_id,
                                        const net::NetMessage &msg) {
    Container &c = container_ref_(container_id);
    if (c.handle.state != ContainerState::Running) {
        stats_.dead_letters += 1;
        engine_.schedule(0, container_id,
                         "DeadLetter:" + std::to_string(msg.msg_id));
        return;
    }
    BehaviorContext ctx(*this, container_id);
    try {
        c.behavior->on_message(msg, ctx);
    } catch (const Error &) {
        stats_.behavior_errors += 1;
        engine_.schedule(0, container_id,
                         "BehaviorError:" + std::to_string(msg.msg_id));
    }
}

const ContainerHandle &
ElasticRuntime::container(const std::string &container_id) const {
    auto it = containers_.find(container_id);
    if (it == containers_.end())
        throw Error("container: unknown id '" + container_id + "'");
    return it->second.handle;
}

ElasticRuntime::Container &
ElasticRuntime::container_ref_(const std::string &container_id) {
    auto it = containers_.find(container_id);
    if (it == containers_.end())
        throw Error("container: unknown id '" + container_id + "'");
    return it->second;
}

std::vector<ContainerHandle>
ElasticRuntime::containers(const std::string &app_id) const {
    auto it = apps_.find(app_id);
    if (it == apps_.end())
        throw UnknownApp("containers: no app '" + app_id + "'");
    std::vector<ContainerHandle> out;
    for (const std::string &cid : it->second.container_ids)
        out.push_back(containers_.at(cid).handle);
    return out;
}

std::vector<std::string> ElasticRuntime::running_instances() const {
    std::vector<std::string> out;
    for (const auto &[cid, c] : containers_)
        if (c.handle.state == ContainerState::Running)
            out.push_back(c.handle.instance_id);
    std::sort(out.begin(), out.end());
    return out;
}

const AppDescriptor &
ElasticRuntime::descriptor(const std::string &app_id) const {
    auto it = apps_.find(app_id);
    if (it == apps_.end())
        throw UnknownApp("descriptor: no app '" + app_id + "'");
    return it->second.descriptor;
}

std::size_t ElasticRuntime::live_count_(const App &app,
                                        const std::string &service_name) const {
    std::size_t n = 0;
    for (const std::string &cid : app.container_ids) {
        const Container &c = containers_.at(cid);
        if (c.handle.process.service_name == service_name &&
            c.handle.state != ContainerState::Stopped)
            ++n;
    }
    return n;
}

} // namespace concurpaas::runtime
