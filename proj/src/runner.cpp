#include <concurpaas/harness/runner.hpp>

#include <iomanip>
#include <optional>
#include <sstream>

#include <concurpaas/errors.hpp>
#include <concurpaas/harness/world.hpp>

namespace concurpaas::harness {

RunArtifacts run_scenario(const Scenario &scenario) {
    validate_scenario(scenario, builtin_behaviors());
    World w(scenario);
    w.engine.run_until(scenario.sim.horizon);

    RunArtifacts out;
    out.samples = w.fabric.drain_samples();
    out.fire_log = w.fire_log;
    out.trace_text = w.engine.trace().to_text();
    std::optional<Duration> reaction;
    try {
        reaction = fire::end_to_end_reaction_time(w.fire_log);
    } catch (const IncompleteScenario &) {
        reaction = std::nullopt;
    }
    out.report = build_report(scenario.sim.rng_seed, scenario.sim.horizon,
                              out.samples, reaction,
                              w.engine.trace().digest());
    return out;
}

RunArtifacts run_scenario_file(const std::string &path) {
    return run_scenario(load_scenario_file(path));
}

ModeComparison compare_modes(const Scenario &scenario) {
    Scenario direct = scenario;
    direct.app.channel_mode = net::ChannelMode::Direct;
    Scenario proxied = scenario;
    proxied.app.channel_mode = net::ChannelMode::Proxied;

    ModeComparison cmp;
    cmp.direct_run = run_scenario(direct);
    cmp.proxied_run = run_scenario(proxied);
    const LatencyAggregate &d = cmp.direct_run.report.direct;
    const LatencyAggregate &p = cmp.proxied_run.report.proxied;
    cmp.mean_delta_us = p.mean_us - d.mean_us;
    cmp.median_delta_us = static_cast<std::int64_t>(p.median_us) -
                          static_cast<std::int64_t>(d.median_us);
    cmp.p95_delta_us = static_cast<std::int64_t>(p.p95_us) -
                       static_cast<std::int64_t>(d.p95_us);
    cmp.regression = d.mean_us >= p.mean_us;
    return cmp;
}

std::string comparison_table(const ModeComparison &cmp) {
    const LatencyAggregate &d = cmp.direct_run.report.direct;
    const LatencyAggregate &p = cmp.proxied_run.report.proxied;
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << "mode     count      mean_us  median_us     p95_us     max_us\n";
    auto row = [&out](const char *name, const LatencyAggregate &a) {
        out << std::left << std::setw(8) << name << std::right << std::setw(6)
            << a.count << std::setw(13) << a.mean_us << std::setw(11)
            << a.median_us << std::setw(11) << a.p95_us << std::setw(11)
            << a.max_us << "\n";
    };
    row("Direct", d);
    row("Proxied", p);
    out << "delta (Proxied-Direct): mean_us=" << cmp.mean_delta_us
        << " median_us=" << cmp.median_delta_us
        << " p95_us=" << cmp.p95_delta_us << "\n";
    auto reaction = [](const RunArtifacts &run) {
        std::ostringstream s;
        if (run.report.reaction_time_us)
            s << *run.report.reaction_time_us;
        else
            s << "n/a";
        return s.str();
    };
    out << "reaction_time_us: Direct=" << reaction(cmp.direct_run)
        << " Proxied=" << reaction(cmp.proxied_run) << "\n";
    out << "throughput_msgs_per_s: Direct="
        << cmp.direct_run.report.throughput_msgs_per_s
        << " Proxied=" << cmp.proxied_run.report.throughput_msgs_per_s
        << "\n";
    out << "regression: " << (cmp.regression ? "yes" : "no") << "\n";
    return out.str();
}

} // namespace concurpaas::harness
