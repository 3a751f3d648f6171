#include <concurpaas/net/fabric.hpp>

#include <sstream>
#include <utility>

#include <concurpaas/errors.hpp>
#include <concurpaas/wire.hpp>

namespace concurpaas::net {

namespace {

constexpr const char *kComponentId = "fabric";
constexpr const char *kArrive = "Arrive";
constexpr const char *kAckArrive = "AckArrive";
constexpr const char *kRto = "Rto";

sim::Payload encode_ref(std::uint64_t msg_id, std::uint32_t attempt) {
    wire::Writer w;
    w.u64(msg_id);
    w.u32(attempt);
    return w.take();
}

} // namespace

std::string to_string(ChannelMode mode) {
    return mode == ChannelMode::Direct ? "Direct" : "Proxied";
}

ChannelMode channel_mode_from_string(const std::string &s) {
    if (s == "Direct")
        return ChannelMode::Direct;
    if (s == "Proxied")
        return ChannelMode::Proxied;
    throw Error("unknown channel mode '" + s + "'");
}

std::string to_string(MsgKind kind) {
    switch (kind) {
    case MsgKind::Reading:
        return "Reading";
    case MsgKind::Alert:
        return "Alert";
    case MsgKind::Reprogram:
        return "Reprogram";
    case MsgKind::Ack:
        return "Ack";
    case MsgKind::Custom:
        return "Custom";
    }
    return "Custom";
}

Fabric::Fabric(sim::Engine &engine, FabricConfig cfg, Resolver resolve_service)
    : engine_(engine), cfg_(cfg), resolve_service_(std::move(resolve_service)) {
    if (cfg_.d_hop == 0)
        throw Error("fabric: d_hop must be > 0");
    if (cfg_.drop_prob < 0.0 || cfg_.drop_prob >= 1.0)
        throw Error("fabric: drop_prob must lie in [0, 1)");
    if (cfg_.max_attempts == 0)
        throw Error("fabric: max_attempts must be >= 1");
    if (cfg_.rto == 0)
        throw Error("fabric: rto must be > 0");
    engine_.attach(kComponentId,
                   [this](const sim::SimEvent &ev) { on_event_(ev); });
}

NetAddress Fabric::allocate_interface(const std::string &owner_id) {
    if (by_owner_.count(owner_id)) {
        throw AlreadyAllocated("allocate_interface: '" + owner_id +
                               "' already owns an interface");
    }
    const NetAddress addr{next_address_++};
    owners_.emplace(addr.value, owner_id);
    by_owner_.emplace(owner_id, addr);
    return addr;
}

bool Fabric::is_allocated(NetAddress addr) const {
    return owners_.count(addr.value) != 0;
}

const std::string &Fabric::owner_of(NetAddress addr) const {
    auto it = owners_.find(addr.value);
    if (it == owners_.end())
        throw Error("owner_of: address " + std::to_string(addr.value) +
                    " is not allocated");
    return it->second;
}

void Fabric::attach_receiver(NetAddress addr, Receiver receiver) {
    if (!is_allocated(addr))
        throw Error("attach_receiver: address " + std::to_string(addr.value) +
                    " is not allocated");
    if (!receiver)
        throw Error("attach_receiver: empty receiver");
    auto [it, inserted] = receivers_.emplace(addr.value, std::move(receiver));
    (void)it;
    if (!inserted)
        throw Error("attach_receiver: address " +
                    std::to_string(addr.value) + " already has a receiver");
}

ChannelId Fabric::open_channel(NetAddress src, const std::string &dst_service,
                               ChannelMode mode) {
    if (!is_allocated(src))
        throw Error("open_channel: source address " +
                    std::to_string(src.value) + " is not allocated");
    const NetAddress dst = resolve_service_(dst_service);
    const ChannelId id = next_channel_++;
    channels_.emplace(id, Channel{id, src, dst, mode});
    return id;
}

const Channel &Fabric::channel(ChannelId id) const {
    auto it = channels_.find(id);
    if (it == channels_.end())
        throw Error("channel: unknown channel id " + std::to_string(id));
    return it->second;
}

Duration Fabric::one_way_latency(ChannelMode mode) const {
    if (mode == ChannelMode::Direct)
        return cfg_.d_hop;
    return 2 * cfg_.d_hop + cfg_.d_proxy;
}

std::uint64_t Fabric::send(ChannelId channel_id, MsgKind kind,
                           std::vector<std::byte> body) {
    const Channel &ch = channel(channel_id);
    return send_message(ch.src, ch.dst, ch.mode, kind, std::move(body));
}

std::uint64_t Fabric::send_message(NetAddress src, NetAddress dst,
                                   ChannelMode mode, MsgKind kind,
                                   std::vector<std::byte> body) {
    if (!is_allocated(src) || !is_allocated(dst))
        throw Error("send_message: both endpoints must own interfaces");
    const std::uint64_t msg_id = next_msg_++;
    Transfer t;
    t.msg = NetMessage{msg_id, src,           dst, kind,
                       std::move(body), engine_.now(), 1};
    t.mode = mode;
    stats_.sends += 1;
    auto [it, inserted] = in_flight_.emplace(msg_id, std::move(t));
    (void)inserted;
    transmit_(it->second);
    return msg_id;
}

std::vector<LatencySample> Fabric::drain_samples() {
    std::vector<LatencySample> out;
    out.swap(samples_);
    return out;
}

void Fabric::on_event_(const sim::SimEvent &ev) {
    if (ev.kind == kArrive) {
        wire::Reader r(ev.payload);
        const std::uint64_t msg_id = r.u64();
        const std::uint32_t attempt = r.u32();
        on_arrive_(msg_id, attempt);
    } else if (ev.kind == kAckArrive) {
        wire::Reader r(ev.payload);
        on_ack_(r.u64());
    } else if (ev.kind == kRto) {
        wire::Reader r(ev.payload);
        on_rto_(r.u64());
    }
}

bool Fabric::drop_decision_(std::uint64_t msg_id, std::uint32_t attempt) {
    if (drop_override_) {
        if (auto forced = drop_override_(msg_id, attempt))
            return *forced;
    }
    if (cfg_.drop_prob <= 0.0)
        return false;
    return engine_.rng().uniform01() < cfg_.drop_prob;
}

void Fabric::transmit_(Transfer &t) {
    stats_.transmissions += 1;
    const bool dropped = drop_decision_(t.msg.msg_id, t.msg.attempt);
    if (!dropped) {
        const Duration lat = one_way_latency(t.mode);
        if (engine_.within_horizon(lat))
            engine_.schedule(lat, kComponentId, kArrive,
                             encode_ref(t.msg.msg_id, t.msg.attempt));
    }
    // The retransmission timer outlives a successful attempt on purpose:
    // only the returning ack may disarm it.
    if (engine_.within_horizon(cfg_.rto))
        t.rto_event = engine_.schedule(cfg_.rto, kComponentId, kRto,
                                       encode_ref(t.msg.msg_id, 0));
    else
        t.rto_event = 0;
}

void Fabric::on_arrive_(std::uint64_t msg_id, std::uint32_t attempt) {
    auto it = in_flight_.find(msg_id);
    if (it == in_flight_.end()) {
        // Late arrival for a finished transfer: a duplicate of a delivered
        // message, or a straggler past a declared failure.
        if (delivered_ids_.count(msg_id) != 0)
            stats_.duplicates_suppressed += 1;
        return;
    }
    Transfer &t = it->second;
    const bool duplicate = delivered_ids_.count(msg_id) != 0;
    if (!duplicate) {
        delivered_ids_.insert(msg_id);
        const VirtualTime now = engine_.now();
        samples_.push_back(LatencySample{msg_id, t.mode, t.msg.sent_at, now,
                                         now - t.msg.sent_at});
        stats_.delivered += 1;
        auto rcv = receivers_.find(t.msg.dst.value);
        if (rcv == receivers_.end())
            throw Error("deliver: no receiver attached at address " +
                        std::to_string(t.msg.dst.value));
        NetMessage view = t.msg;
        view.attempt = attempt;
        rcv->second(view);
    } else {
        stats_.duplicates_suppressed += 1;
    }
    // Ack the attempt either way so retransmission stops.
    const Duration lat = one_way_latency(t.mode);
    if (engine_.within_horizon(lat))
        engine_.schedule(lat, kComponentId, kAckArrive, encode_ref(msg_id, 0));
}

void Fabric::on_ack_(std::uint64_t msg_id) {
    auto it = in_flight_.find(msg_id);
    if (it == in_flight_.end())
        return; // duplicate ack after completion
    if (it->second.rto_event != 0)
        engine_.cancel(it->second.rto_event);
    in_flight_.erase(it);
}

void Fabric::on_rto_(std::uint64_t msg_id) {
    auto it = in_flight_.find(msg_id);
    if (it == in_flight_.end())
        return;
    Transfer &t = it->second;
    if (t.msg.attempt >= cfg_.max_attempts) {
        stats_.delivery_failures += 1;
        std::ostringstream kind;
        kind << "DeliveryFailed:" << msg_id;
        engine_.schedule(0, owner_of(t.msg.src), kind.str());
        in_flight_.erase(it);
        return;
    }
    t.msg.attempt += 1;
    transmit_(t);
}

} // namespace concurpaas::net
