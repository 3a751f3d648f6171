#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <concurpaas/fire/fire.hpp>
#include <concurpaas/iot/gateway.hpp>
#include <concurpaas/net/types.hpp>
#include <concurpaas/runtime/runtime.hpp>
#include <concurpaas/sim/engine.hpp>

namespace concurpaas::harness {

struct WorkloadSpec {
    std::uint64_t msg_count = 0;
    std::uint32_t payload_bytes = 0;
    Duration interval = 1'000;
};

struct Scenario {
    sim::SimConfig sim;
    net::FabricConfig fabric;
    std::vector<iot::SensorSpec> sensors;
    std::vector<iot::PortBinding> bindings;
    runtime::AppDescriptor app;
    fire::FireConfig fire;
    std::optional<WorkloadSpec> workload;
};

// Parses the JSON scenario document. Missing optional sections fall back
// to defaults; malformed or missing required fields raise ParseError
// naming the field.
Scenario parse_scenario(const std::string &json_text);

// parse_scenario over the file's contents, with the CONCURPAAS_SEED
// environment variable (when set) overriding the scenario's seed.
// A missing or unreadable file raises ParseError naming the path.
Scenario load_scenario_file(const std::string &path);

// Cross-checks references: bindings against sensors and services,
// behaviors against the catalog ids, uniqueness of sensors and ports, and
// scaling bounds. Throws ValidationError naming the offender.
void validate_scenario(const Scenario &scenario,
                       const std::vector<std::string> &known_behaviors);

// Behavior ids the built-in catalog provides.
std::vector<std::string> builtin_behaviors();

} // namespace concurpaas::harness
