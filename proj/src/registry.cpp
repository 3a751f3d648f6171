#include <concurpaas/registry/registry.hpp>

#include <sstream>
#include <utility>

#include <concurpaas/errors.hpp>

namespace concurpaas::registry {

namespace {

constexpr const char *kComponentId = "registry";
constexpr const char *kEvictTick = "EvictTick";

} // namespace

std::string to_string(RecordStatus status) {
    return status == RecordStatus::Up ? "Up" : "Expired";
}

ServiceRegistry::ServiceRegistry(sim::Engine &engine, RegistryConfig cfg,
                                 EndpointValidator endpoint_allocated)
    : engine_(engine), cfg_(cfg),
      endpoint_allocated_(std::move(endpoint_allocated)) {
    if (cfg_.lease_duration == 0 || cfg_.evictor_period == 0)
        throw Error("registry: lease_duration and evictor_period must be > 0");
    engine_.attach(kComponentId,
                   [this](const sim::SimEvent &ev) { on_event_(ev); });
}

void ServiceRegistry::start_evictor() {
    if (evictor_started_)
        return;
    evictor_started_ = true;
    if (engine_.within_horizon(cfg_.evictor_period))
        engine_.schedule(cfg_.evictor_period, kComponentId, kEvictTick);
}

void ServiceRegistry::on_event_(const sim::SimEvent &ev) {
    if (ev.kind == kEvictTick) {
        evict_expired();
        if (engine_.within_horizon(cfg_.evictor_period))
            engine_.schedule(cfg_.evictor_period, kComponentId, kEvictTick);
    }
    // Eviction notices addressed to the registry carry no action.
}

Lease ServiceRegistry::register_instance(const std::string &service_name,
                                         const std::string &instance_id,
                                         net::NetAddress endpoint) {
    if (!endpoint_allocated_ || !endpoint_allocated_(endpoint)) {
        std::ostringstream msg;
        msg << "register: endpoint " << endpoint.value << " for "
            << service_name << "/" << instance_id
            << " is not an allocated fabric address";
        throw InvalidEndpoint(msg.str());
    }
    ServiceRecord rec;
    rec.service_name = service_name;
    rec.instance_id = instance_id;
    rec.endpoint = endpoint;
    rec.registered_at = engine_.now();
    rec.lease_expiry = engine_.now() + cfg_.lease_duration;
    rec.status = RecordStatus::Up;
    rec.renewed_count = 0;
    services_[service_name][instance_id] = rec;
    return Lease{cfg_.lease_duration, 0};
}

Lease ServiceRegistry::renew(const std::string &service_name,
                             const std::string &instance_id) {
    auto svc = services_.find(service_name);
    if (svc != services_.end()) {
        auto inst = svc->second.find(instance_id);
        if (inst != svc->second.end() &&
            inst->second.status == RecordStatus::Up) {
            inst->second.lease_expiry = engine_.now() + cfg_.lease_duration;
            inst->second.renewed_count += 1;
            return Lease{cfg_.lease_duration, inst->second.renewed_count};
        }
    }
    throw NotRegistered("renew: " + service_name + "/" + instance_id +
                        " is not registered as Up");
}

net::NetAddress ServiceRegistry::lookup(const std::string &service_name) {
    if (auto addr = try_lookup(service_name))
        return *addr;
    throw NotFound("lookup: no live instance of '" + service_name + "'");
}

std::optional<net::NetAddress>
ServiceRegistry::try_lookup(const std::string &service_name) {
    auto svc = services_.find(service_name);
    if (svc == services_.end())
        return std::nullopt;
    // Eligibility is checked against the lease itself, not just the status
    // flag, so records the evictor has not visited yet are still excluded.
    std::vector<const ServiceRecord *> live;
    for (const auto &[id, rec] : svc->second) {
        if (rec.status == RecordStatus::Up && rec.lease_expiry > engine_.now())
            live.push_back(&rec);
    }
    if (live.empty())
        return std::nullopt;
    std::uint64_t &counter = rr_[service_name];
    const ServiceRecord *pick = live[counter % live.size()];
    counter += 1;
    return pick->endpoint;
}

bool ServiceRegistry::deregister(const std::string &service_name,
                                 const std::string &instance_id) {
    auto svc = services_.find(service_name);
    if (svc == services_.end())
        return false;
    auto inst = svc->second.find(instance_id);
    if (inst == svc->second.end())
        return false;
    const bool was_up = inst->second.status == RecordStatus::Up;
    svc->second.erase(inst);
    if (svc->second.empty())
        services_.erase(svc);
    return was_up;
}

std::vector<std::pair<std::string, std::string>>
ServiceRegistry::evict_expired() {
    std::vector<std::pair<std::string, std::string>> evicted;
    for (auto &[service, instances] : services_) {
        for (auto &[id, rec] : instances) {
            if (rec.status == RecordStatus::Up &&
                rec.lease_expiry.ticks <= engine_.now().ticks) {
                rec.status = RecordStatus::Expired;
                evicted.emplace_back(service, id);
            }
        }
    }
    for (const auto &[service, id] : evicted)
        engine_.schedule(0, kComponentId, "Evicted:" + service + "/" + id);
    return evicted;
}

std::string ServiceRegistry::dump() const {
    std::ostringstream out;
    for (const auto &[service, instances] : services_) {
        for (const auto &[id, rec] : instances) {
            out << service << ' ' << id << ' ' << rec.endpoint.value << ' '
                << to_string(rec.status) << ' ' << rec.lease_expiry.ticks
                << '\n';
        }
    }
    return out.str();
}

std::vector<ServiceRecord> ServiceRegistry::snapshot() const {
    std::vector<ServiceRecord> out;
    for (const auto &[service, instances] : services_)
        for (const auto &[id, rec] : instances)
            out.push_back(rec);
    return out;
}

std::size_t
ServiceRegistry::up_count(const std::string &service_name) const {
    auto svc = services_.find(service_name);
    if (svc == services_.end())
        return 0;
    std::size_t n = 0;
    for (const auto &[id, rec] : svc->second)
        if (rec.status == RecordStatus::Up)
            ++n;
    return n;
}

} // namespace concurpaas::registry
