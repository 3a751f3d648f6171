#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <concurpaas/net/types.hpp>
#include <concurpaas/sim/time.hpp>

namespace concurpaas::harness {

struct LatencyAggregate {
    std::size_t count = 0;
    double mean_us = 0.0;
    Duration median_us = 0; // nearest-rank
    Duration p95_us = 0;    // nearest-rank
    Duration max_us = 0;
};

// Nearest-rank order statistics over a copy of the samples; an empty input
// yields the zero aggregate.
LatencyAggregate aggregate_latencies(std::vector<Duration> samples);

struct MetricsReport {
    std::uint64_t seed = 0;
    VirtualTime horizon;
    LatencyAggregate direct;
    LatencyAggregate proxied;
    double throughput_msgs_per_s = 0.0; // deliveries per simulated second
    std::optional<Duration> reaction_time_us;
    std::string determinism_digest; // "fnv1a:<16 hex>" over the trace

    // Stable field order; byte-identical for identical runs.
    std::string to_json_text() const;
};

MetricsReport build_report(std::uint64_t seed, VirtualTime horizon,
                           const std::vector<net::LatencySample> &samples,
                           std::optional<Duration> reaction_time,
                           std::uint64_t trace_digest);

// CSV with header msg_id,mode,sent_at_us,delivered_at_us,one_way_us.
std::string samples_to_csv(const std::vector<net::LatencySample> &samples);

std::string format_digest(std::uint64_t digest);

} // namespace concurpaas::harness
