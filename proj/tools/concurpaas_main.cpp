// Command-line front end: run scenarios, compare routing modes, inspect
// the registry, reprogram sensors, and export traces.
//
// Exit codes: 0 success, 1 usage error, 2 scenario parse/validation error,
// 3 latency regression detected by compare.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <concurpaas/errors.hpp>
#include <concurpaas/harness/runner.hpp>
#include <concurpaas/harness/world.hpp>

namespace {

namespace cp = concurpaas;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitRegression = 3;

void write_file(const std::string &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw cp::Error("cannot write file '" + path + "'");
    out << content;
}

int cmd_run(const std::string &scenario_path,
            const std::optional<std::string> &csv_dir) {
    const cp::harness::Scenario scenario =
        cp::harness::load_scenario_file(scenario_path);
    const cp::harness::RunArtifacts run = cp::harness::run_scenario(scenario);
    if (csv_dir) {
        std::filesystem::create_directories(*csv_dir);
        write_file(*csv_dir + "/latency_samples.csv",
                   cp::harness::samples_to_csv(run.samples));
        write_file(*csv_dir + "/fire_events.csv", run.fire_log.to_csv());
    }
    std::cout << run.report.to_json_text();
    return kExitOk;
}

int cmd_compare(const std::string &scenario_path) {
    const cp::harness::Scenario scenario =
        cp::harness::load_scenario_file(scenario_path);
    const cp::harness::ModeComparison cmp =
        cp::harness::compare_modes(scenario);
    std::cout << cp::harness::comparison_table(cmp);
    return cmp.regression ? kExitRegression : kExitOk;
}

int cmd_registry_ls(const std::string &scenario_path) {
    const cp::harness::Scenario scenario =
        cp::harness::load_scenario_file(scenario_path);
    cp::harness::validate_scenario(scenario,
                                   cp::harness::builtin_behaviors());
    cp::harness::World world(scenario);
    world.engine.run_until(scenario.sim.horizon);
    std::cout << world.registry.dump();
    return kExitOk;
}

int cmd_trace(const std::string &scenario_path, const std::string &out_path) {
    const cp::harness::RunArtifacts run =
        cp::harness::run_scenario_file(scenario_path);
    write_file(out_path, run.trace_text);
    return kExitOk;
}

cp::iot::ReprogramCommand parse_reprogram_args(
    const std::string &sensor_id, const std::vector<std::string> &params) {
    cp::iot::ReprogramCommand cmd;
    cmd.target_sensor = sensor_id;
    for (const std::string &kv : params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw CLI::ValidationError("params", "expected key=value, got '" +
                                                     kv + "'");
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        if (key == "sample_interval_us") {
            cmd.sample_interval = std::stoull(value);
        } else if (key == "enabled") {
            if (value != "true" && value != "false")
                throw CLI::ValidationError("params",
                                           "enabled must be true or false");
            cmd.enabled = value == "true";
        } else if (key == "trace") {
            // t_us:value[;t_us:value...]
            std::vector<cp::iot::TracePoint> trace;
            std::size_t pos = 0;
            while (pos < value.size()) {
                const auto semi = value.find(';', pos);
                const std::string item =
                    value.substr(pos, semi == std::string::npos
                                          ? std::string::npos
                                          : semi - pos);
                const auto colon = item.find(':');
                if (colon == std::string::npos)
                    throw CLI::ValidationError(
                        "params", "trace items must be t_us:value");
                trace.push_back(cp::iot::TracePoint{
                    cp::VirtualTime{std::stoull(item.substr(0, colon))},
                    std::stod(item.substr(colon + 1))});
                if (semi == std::string::npos)
                    break;
                pos = semi + 1;
            }
            cmd.trace_override = std::move(trace);
        } else {
            throw CLI::ValidationError("params", "unknown key '" + key + "'");
        }
    }
    return cmd;
}

int cmd_reprogram(const std::string &scenario_path,
                  const std::string &sensor_id,
                  const std::vector<std::string> &params, std::uint64_t at) {
    cp::iot::ReprogramCommand cmd;
    try {
        cmd = parse_reprogram_args(sensor_id, params);
    } catch (const std::invalid_argument &) {
        throw CLI::ValidationError("params", "malformed numeric value");
    } catch (const std::out_of_range &) {
        throw CLI::ValidationError("params", "numeric value out of range");
    }
    const cp::harness::Scenario scenario =
        cp::harness::load_scenario_file(scenario_path);
    cp::harness::validate_scenario(scenario,
                                   cp::harness::builtin_behaviors());
    cp::harness::World world(scenario);
    world.engine.schedule(at, "gateway", "ApplyReprogram",
                          cp::iot::encode_reprogram(cmd));
    world.engine.run_until(scenario.sim.horizon);
    const cp::iot::SensorParams effective =
        world.gateway.sensor_params(sensor_id);
    std::cout << "applied " << sensor_id
              << " sample_interval_us=" << effective.sample_interval
              << " enabled=" << (effective.enabled ? "true" : "false")
              << " trace_points=" << effective.trace_points << "\n"
              << "emissions " << world.gateway.emissions(sensor_id).size()
              << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"IoT platform simulator: direct container networking "
                 "versus proxied HTTP routing"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::optional<std::string> csv_dir;
    std::string out_path;
    std::string sensor_id;
    std::vector<std::string> reprogram_params;
    std::uint64_t at_us = 0;

    CLI::App *run = app.add_subcommand("run", "Run a scenario and print the "
                                              "metrics report as JSON");
    run->add_option("scenario", scenario_path, "Scenario JSON file")
        ->required();
    run->add_option("--csv", csv_dir,
                    "Directory for latency_samples.csv and fire_events.csv");

    CLI::App *compare = app.add_subcommand(
        "compare", "Run a scenario in both channel modes and print a table");
    compare->add_option("scenario", scenario_path, "Scenario JSON file")
        ->required();

    CLI::App *registry = app.add_subcommand("registry", "Registry tools");
    registry->require_subcommand(1);
    CLI::App *registry_ls = registry->add_subcommand(
        "ls", "Run a scenario and list the registry records at the horizon");
    registry_ls->add_option("scenario", scenario_path, "Scenario JSON file")
        ->required();

    CLI::App *reprogram = app.add_subcommand(
        "reprogram", "Apply key=value parameters to a sensor mid-run");
    reprogram->add_option("sensor", sensor_id, "Target sensor id")
        ->required();
    reprogram
        ->add_option("params", reprogram_params,
                     "sample_interval_us=N enabled=true|false "
                     "trace=t_us:value[;t_us:value...]")
        ->expected(-1);
    reprogram->add_option("--scenario", scenario_path, "Scenario JSON file")
        ->required();
    reprogram->add_option("--at", at_us,
                          "Virtual time (us) at which to apply");

    CLI::App *trace = app.add_subcommand(
        "trace", "Run a scenario and write the executed-event trace");
    trace->add_option("scenario", scenario_path, "Scenario JSON file")
        ->required();
    trace->add_option("-o,--output", out_path, "Trace output file")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e); // prints help, exits 0
    } catch (const CLI::ParseError &e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (run->parsed())
            return cmd_run(scenario_path, csv_dir);
        if (compare->parsed())
            return cmd_compare(scenario_path);
        if (registry->parsed() && registry_ls->parsed())
            return cmd_registry_ls(scenario_path);
        if (reprogram->parsed())
            return cmd_reprogram(scenario_path, sensor_id, reprogram_params,
                                 at_us);
        if (trace->parsed())
            return cmd_trace(scenario_path, out_path);
    } catch (const CLI::Error &e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const cp::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitUsage;
}
