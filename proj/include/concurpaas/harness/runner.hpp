#pragma once

#include <string>
#include <vector>

#include <concurpaas/fire/fire.hpp>
#include <concurpaas/harness/report.hpp>
#include <concurpaas/harness/scenario.hpp>
#include <concurpaas/net/types.hpp>

namespace concurpaas::harness {

struct RunArtifacts {
    MetricsReport report;
    std::vector<net::LatencySample> samples; // delivery order
    fire::FireEventLog fire_log;
    std::string trace_text;
};

// Builds the full platform from the scenario, runs it to the horizon, and
// collects metrics. Validates first; identical scenario + seed always
// produces identical artifacts.
RunArtifacts run_scenario(const Scenario &scenario);
RunArtifacts run_scenario_file(const std::string &path);

struct ModeComparison {
    RunArtifacts direct_run;
    RunArtifacts proxied_run;
    // Own-mode aggregates: the Direct run's direct numbers against the
    // Proxied run's proxied numbers.
    double mean_delta_us = 0.0;   // proxied - direct
    std::int64_t median_delta_us = 0;
    std::int64_t p95_delta_us = 0;
    bool regression = false; // direct mean >= proxied mean
};

// Runs the scenario once per channel mode with the same seed.
ModeComparison compare_modes(const Scenario &scenario);

std::string comparison_table(const ModeComparison &cmp);

} // namespace concurpaas::harness
