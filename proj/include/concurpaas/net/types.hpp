#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <concurpaas/sim/time.hpp>

namespace concurpaas::net {

// Dense interface id, allocated from 1 and never reused within a run.
// value 0 means "unallocated".
struct NetAddress {
    std::uint32_t value = 0;

    auto operator<=>(const NetAddress &) const = default;
};

enum class ChannelMode { Direct, Proxied };

std::string to_string(ChannelMode mode);
ChannelMode channel_mode_from_string(const std::string &s);

enum class MsgKind { Reading, Alert, Reprogram, Ack, Custom };

std::string to_string(MsgKind kind);

struct NetMessage {
    std::uint64_t msg_id = 0; // unique per logical send, not per attempt
    NetAddress src;
    NetAddress dst;
    MsgKind kind = MsgKind::Custom;
    std::vector<std::byte> body;
    VirtualTime sent_at;       // first attempt only
    std::uint32_t attempt = 1; // transmission that produced this arrival
};

struct FabricConfig {
    Duration d_hop = 5'000;
    Duration d_proxy = 2'000;
    double drop_prob = 0.0; // in [0, 1)
    Duration rto = 20'000;
    std::uint32_t max_attempts = 10;
};

struct LatencySample {
    std::uint64_t msg_id = 0;
    ChannelMode mode = ChannelMode::Direct;
    VirtualTime sent_at;
    VirtualTime delivered_at;
    Duration one_way = 0; // delivered_at - sent_at, first attempt to delivery
};

} // namespace concurpaas::net
