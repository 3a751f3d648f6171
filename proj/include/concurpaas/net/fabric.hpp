#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <concurpaas/net/types.hpp>
#include <concurpaas/sim/engine.hpp>

namespace concurpaas::net {

using ChannelId = std::uint64_t;

struct Channel {
    ChannelId id = 0;
    NetAddress src;
    NetAddress dst; // resolved once, when the channel was opened
    ChannelMode mode = ChannelMode::Direct;
};

struct FabricStats {
    std::uint64_t sends = 0;         // logical sends
    std::uint64_t transmissions = 0; // attempts, including retransmits
    std::uint64_t delivered = 0;     // application deliveries (deduplicated)
    std::uint64_t duplicates_suppressed = 0;
    std::uint64_t delivery_failures = 0;
};

// Container network. Every endpoint owns a unique interface; messages ride
// either the direct container route (one hop) or the proxied HTTP route
// (two hops plus proxy overhead). Transport is at-least-once: unacked
// attempts are retransmitted every rto until max_attempts, and receivers
// deduplicate by msg_id so applications observe exactly-once delivery.
// Acks ride the same latency as data and are never dropped.
class Fabric {
  public:
    using Receiver = std::function<void(const NetMessage &)>;
    // Resolves a service name to an endpoint; used when channels open.
    using Resolver = std::function<NetAddress(const std::string &)>;
    // Test hook: overrides the drop decision for (msg_id, attempt).
    using DropOverride =
        std::function<std::optional<bool>(std::uint64_t, std::uint32_t)>;

    Fabric(sim::Engine &engine, FabricConfig cfg, Resolver resolve_service);

    // Interfaces are dense from 1 and never reused within a run. One per
    // owner; a second request throws AlreadyAllocated.
    NetAddress allocate_interface(const std::string &owner_id);
    bool is_allocated(NetAddress addr) const;
    const std::string &owner_of(NetAddress addr) const;

    // Delivery callback for an allocated address. Exactly one per address.
    void attach_receiver(NetAddress addr, Receiver receiver);

    // Binds src to the service's current endpoint (resolver is consulted
    // once, here). Re-pointing after scale-out means opening a new channel.
    ChannelId open_channel(NetAddress src, const std::string &dst_service,
                           ChannelMode mode);
    const Channel &channel(ChannelId id) const;

    Duration one_way_latency(ChannelMode mode) const;

    std::uint64_t send(ChannelId channel_id, MsgKind kind,
                       std::vector<std::byte> body);

    // Channel-free send to a known address; the primitive under channels
    // and under per-message service resolution.
    std::uint64_t send_message(NetAddress src, NetAddress dst,
                               ChannelMode mode, MsgKind kind,
                               std::vector<std::byte> body);

    // Returns and clears samples recorded since the last drain, in
    // delivery order.
    std::vector<LatencySample> drain_samples();

    const FabricStats &stats() const { return stats_; }
    void set_drop_override(DropOverride fn) { drop_override_ = std::move(fn); }

  private:
    struct Transfer {
        NetMessage msg; // attempt counts transmissions so far
        ChannelMode mode = ChannelMode::Direct;
        sim::EventId rto_event = 0;
    };

    void on_event_(const sim::SimEvent &ev);
    void transmit_(Transfer &t);
    bool drop_decision_(std::uint64_t msg_id, std::uint32_t attempt);
    void on_arrive_(std::uint64_t msg_id, std::uint32_t attempt);
    void on_ack_(std::uint64_t msg_id);
    void on_rto_(std::uint64_t msg_id);

    sim::Engine &engine_;
    FabricConfig cfg_;
    Resolver resolve_service_;
    DropOverride drop_override_;

    std::uint32_t next_address_ = 1;
    std::unordered_map<std::uint32_t, std::string> owners_; // addr -> owner
    std::unordered_map<std::string, NetAddress> by_owner_;
    std::unordered_map<std::uint32_t, Receiver> receivers_;

    ChannelId next_channel_ = 1;
    std::unordered_map<ChannelId, Channel> channels_;

    std::uint64_t next_msg_ = 1;
    std::unordered_map<std::uint64_t, Transfer> in_flight_;
    std::unordered_set<std::uint64_t> delivered_ids_;
    std::vector<LatencySample> samples_;
    FabricStats stats_;
};

} // namespace concurpaas::net
