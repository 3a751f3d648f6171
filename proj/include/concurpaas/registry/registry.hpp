#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <concurpaas/net/types.hpp>
#include <concurpaas/sim/engine.hpp>

namespace concurpaas::registry {

struct RegistryConfig {
    Duration lease_duration = 30'000'000;
    Duration evictor_period = 10'000'000;
};

struct Lease {
    Duration duration = 0;
    std::uint32_t renewed_count = 0;
};

enum class RecordStatus { Up, Expired };

std::string to_string(RecordStatus status);

struct ServiceRecord {
    std::string service_name;
    std::string instance_id;
    net::NetAddress endpoint;
    VirtualTime registered_at;
    VirtualTime lease_expiry;
    RecordStatus status = RecordStatus::Up;
    std::uint32_t renewed_count = 0;
};

// Lease-based instance directory. Lookups rotate round-robin over live
// instances of a service; expiry is enforced at lookup time even between
// evictor passes, so a stale record can never be handed out.
class ServiceRegistry {
  public:
    using EndpointValidator = std::function<bool(net::NetAddress)>;

    ServiceRegistry(sim::Engine &engine, RegistryConfig cfg,
                    EndpointValidator endpoint_allocated);

    // Schedules the periodic eviction pass. Safe to call once per run.
    void start_evictor();

    // Re-registering an existing instance resets its lease and revives an
    // Expired record. Throws InvalidEndpoint for addresses the fabric has
    // not allocated.
    Lease register_instance(const std::string &service_name,
                            const std::string &instance_id,
                            net::NetAddress endpoint);

    // Heartbeat: extends the lease to now + lease_duration. Throws
    // NotRegistered for unknown or Expired records.
    Lease renew(const std::string &service_name,
                const std::string &instance_id);

    // Round-robin over Up instances whose lease is still live. Throws
    // NotFound when no instance qualifies.
    net::NetAddress lookup(const std::string &service_name);
    std::optional<net::NetAddress> try_lookup(const std::string &service_name);

    // Removes the record entirely. Returns true iff it existed as Up.
    bool deregister(const std::string &service_name,
                    const std::string &instance_id);

    // Marks every record with lease_expiry <= now as Expired and returns
    // the (service_name, instance_id) pairs flipped by this pass. Expired
    // records stay visible until deregistered or re-registered.
    std::vector<std::pair<std::string, std::string>> evict_expired();

    // One line per record: service instance endpoint status lease_expiry.
    // Sorted by (service_name, instance_id).
    std::string dump() const;

    std::vector<ServiceRecord> snapshot() const;
    std::size_t up_count(const std::string &service_name) const;
    const RegistryConfig &config() const { return cfg_; }

  private:
    void on_event_(const sim::SimEvent &ev);

    sim::Engine &engine_;
    RegistryConfig cfg_;
    EndpointValidator endpoint_allocated_;
    // service -> instance -> record; ordered maps keep iteration and dumps
    // deterministic.
    std::map<std::string, std::map<std::string, ServiceRecord>> services_;
    std::map<std::string, std::uint64_t> rr_; // per-service lookup counter
    bool evictor_started_ = false;
};

} // namespace concurpaas::registry
