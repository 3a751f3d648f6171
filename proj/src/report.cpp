#include <concurpaas/harness/report.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace concurpaas::harness {

LatencyAggregate aggregate_latencies(std::vector<Duration> samples) {
    LatencyAggregate agg;
    if (samples.empty())
        return agg;
    std::sort(samples.begin(), samples.end());
    agg.count = samples.size();
    unsigned long long sum = 0;
    for (Duration d : samples)
        sum += d;
    agg.mean_us = static_cast<double>(sum) / static_cast<double>(agg.count);
    auto nearest_rank = [&samples](double q) {
        const std::size_t n = samples.size();
        std::size_t rank = static_cast<std::size_t>(
            std::ceil(q * static_cast<double>(n)));
        if (rank == 0)
            rank = 1;
        return samples[rank - 1];
    };
    agg.median_us = nearest_rank(0.50);
    agg.p95_us = nearest_rank(0.95);
    agg.max_us = samples.back();
    return agg;
}

std::string format_digest(std::uint64_t digest) {
    std::ostringstream out;
    out << "fnv1a:" << std::hex << std::setw(16) << std::setfill('0')
        << digest;
    return out.str();
}

MetricsReport build_report(std::uint64_t seed, VirtualTime horizon,
                           const std::vector<net::LatencySample> &samples,
                           std::optional<Duration> reaction_time,
                           std::uint64_t trace_digest) {
    MetricsReport report;
    report.seed = seed;
    report.horizon = horizon;
    std::vector<Duration> direct;
    std::vector<Duration> proxied;
    for (const net::LatencySample &s : samples) {
        if (s.mode == net::ChannelMode::Direct)
            direct.push_back(s.one_way);
        else
            proxied.push_back(s.one_way);
    }
    report.direct = aggregate_latencies(std::move(direct));
    report.proxied = aggregate_latencies(std::move(proxied));
    report.throughput_msgs_per_s =
        static_cast<double>(samples.size()) /
        (static_cast<double>(horizon.ticks) / 1e6);
    report.reaction_time_us = reaction_time;
    report.determinism_digest = format_digest(trace_digest);
    return report;
}

std::string MetricsReport::to_json_text() const {
    nlohmann::ordered_json doc;
    doc["seed"] = seed;
    doc["horizon_us"] = horizon.ticks;
    auto mode_obj = [](const LatencyAggregate &agg) {
        nlohmann::ordered_json m;
        m["count"] = agg.count;
        m["mean_us"] = agg.mean_us;
        m["median_us"] = agg.median_us;
        m["p95_us"] = agg.p95_us;
        m["max_us"] = agg.max_us;
        return m;
    };
    doc["modes"]["Direct"] = mode_obj(direct);
    doc["modes"]["Proxied"] = mode_obj(proxied);
    doc["throughput_msgs_per_s"] = throughput_msgs_per_s;
    if (reaction_time_us)
        doc["reaction_time_us"] = *reaction_time_us;
    else
        doc["reaction_time_us"] = nullptr;
    doc["determinism_digest"] = determinism_digest;
    return doc.dump(2) + "\n";
}

std::string samples_to_csv(const std::vector<net::LatencySample> &samples) {
    std::ostringstream out;
    out << "msg_id,mode,sent_at_us,delivered_at_us,one_way_us\n";
    for (const net::LatencySample &s : samples)
        out << s.msg_id << ',' << net::to_string(s.mode) << ','
            << s.sent_at.ticks << ',' << s.delivered_at.ticks << ','
            << s.one_way << '\n';
    return out.str();
}

} // namespace concurpaas::harness
