#include <concurpaas/fire/fire.hpp>

#include <sstream>
#include <utility>

#include <concurpaas/errors.hpp>
#include <concurpaas/wire.hpp>

namespace concurpaas::fire {

std::string to_string(FireEventKind kind) {
    switch (kind) {
    case FireEventKind::Crossed:
        return "Crossed";
    case FireEventKind::AlertSent:
        return "AlertSent";
    case FireEventKind::AlertReceived:
        return "AlertReceived";
    case FireEventKind::ReprogramSent:
        return "ReprogramSent";
    case FireEventKind::ReprogramApplied:
        return "ReprogramApplied";
    case FireEventKind::ScaleRequested:
        return "ScaleRequested";
    }
    return "Crossed";
}

void FireEventLog::append(VirtualTime at, FireEventKind kind,
                          std::string detail) {
    entries_.push_back(FireEvent{at, kind, std::move(detail)});
}

std::optional<VirtualTime> FireEventLog::first(FireEventKind kind) const {
    for (const FireEvent &e : entries_)
        if (e.kind == kind)
            return e.at;
    return std::nullopt;
}

std::size_t FireEventLog::count(FireEventKind kind) const {
    std::size_t n = 0;
    for (const FireEvent &e : entries_)
        if (e.kind == kind)
            ++n;
    return n;
}

std::string FireEventLog::to_csv() const {
    std::ostringstream out;
    out << "t_us,kind,detail\n";
    for (const FireEvent &e : entries_)
        out << e.at.ticks << ',' << to_string(e.kind) << ',' << e.detail
            << '\n';
    return out.str();
}

Duration end_to_end_reaction_time(const FireEventLog &log) {
    const auto crossed = log.first(FireEventKind::Crossed);
    const auto applied = log.first(FireEventKind::ReprogramApplied);
    if (!crossed)
        throw IncompleteScenario("reaction time: no threshold crossing");
    if (!applied)
        throw IncompleteScenario("reaction time: no reprogram was applied");
    return *applied - *crossed;
}

std::vector<std::byte> encode_alert(const AlertBody &alert) {
    wire::Writer w;
    w.str(alert.sensor_id);
    w.f64(alert.value);
    w.u64(alert.measured_at.ticks);
    return w.take();
}

AlertBody decode_alert(const std::vector<std::byte> &body) {
    wire::Reader r(body);
    AlertBody out;
    out.sensor_id = r.str();
    out.value = r.f64();
    out.measured_at = VirtualTime{r.u64()};
    return out;
}

FireDetector::FireDetector(FireConfig cfg, FireEventLog &log)
    : cfg_(std::move(cfg)), log_(log) {}

void FireDetector::on_message(const net::NetMessage &msg,
                              runtime::BehaviorContext &ctx) {
    if (msg.kind != net::MsgKind::Reading)
        return;
    const iot::SensorReading reading = iot::decode_reading(msg.body);
    if (reading.kind != iot::SensorKind::Temperature) {
        ctx.annotate("ReadingIgnored:" + reading.sensor_id);
        return;
    }
    if (reading.value <= cfg_.threshold)
        return;

    std::ostringstream detail;
    detail << reading.sensor_id << " value=" << reading.value;
    log_.append(ctx.now(), FireEventKind::Crossed, detail.str());

    if (last_alert_ && ctx.now() < *last_alert_ + cfg_.alert_cooldown)
        return; // still inside the cooldown window
    AlertBody alert{reading.sensor_id, reading.value, reading.measured_at};
    const auto msg_id =
        ctx.send_to_service(cfg_.alert_target, net::MsgKind::Alert,
                            encode_alert(alert));
    if (!msg_id)
        return; // target not discoverable yet; notice already traced
    last_alert_ = ctx.now();
    log_.append(ctx.now(), FireEventKind::AlertSent, detail.str());
}

FireManager::FireManager(FireConfig cfg, FireEventLog &log,
                         net::NetAddress gateway, Options options)
    : cfg_(std::move(cfg)), log_(log), gateway_(gateway),
      options_(std::move(options)) {}

FireManager::Options
FireManager::options_from(const runtime::ProcessSpec &spec) {
    Options o;
    auto get = [&spec](const std::string &key) -> std::optional<std::string> {
        auto it = spec.init_params.find(key);
        if (it == spec.init_params.end())
            return std::nullopt;
        return it->second;
    };
    if (auto v = get("reprogram_target"))
        o.reprogram_target = *v;
    if (auto v = get("reprogram_enabled"))
        o.reprogram_enabled = *v != "false";
    if (auto v = get("scale_enabled"))
        o.scale_enabled = *v != "false";
    if (auto v = get("scale_service"))
        o.scale_service = *v;
    return o;
}

void FireManager::on_message(const net::NetMessage &msg,
                             runtime::BehaviorContext &ctx) {
    if (msg.kind != net::MsgKind::Alert)
        return;
    const AlertBody alert = decode_alert(msg.body);
    std::ostringstream detail;
    detail << alert.sensor_id << " value=" << alert.value;
    log_.append(ctx.now(), FireEventKind::AlertReceived, detail.str());

    if (options_.reprogram_enabled) {
        iot::ReprogramCommand cmd;
        cmd.target_sensor = options_.reprogram_target;
        cmd.sample_interval = cfg_.reprogram_interval;
        ctx.send_to_address(gateway_, net::MsgKind::Reprogram,
                            iot::encode_reprogram(cmd));
        log_.append(ctx.now(), FireEventKind::ReprogramSent,
                    options_.reprogram_target);
    }
    if (options_.scale_enabled) {
        const std::string service = options_.scale_service.empty()
                                        ? ctx.self().process.service_name
                                        : options_.scale_service;
        log_.append(ctx.now(), FireEventKind::ScaleRequested, service);
        ctx.request_scale_out(service);
    }
}

} // namespace concurpaas::fire
