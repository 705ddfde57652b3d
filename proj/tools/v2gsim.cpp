/*
 * v2gsim — fleet-scale simulator for an overnight V2G strategy.
 *
 * Subcommands mirror the pipeline:
 *   gen-fleet   seeded synthetic fleet -> trip log
 *   ingest      trip log -> charge events + per-vehicle timelines
 *   cluster     behavioral features -> k-means driver profiles
 *   simulate    baseline degradation per vehicle and battery design
 *   v2g         strategy scenario: degradation + dispatched energy + revenue
 *   compare     per-cluster capacity deltas, dispatch/revenue tables,
 *               statistical tests and regressions
 *   report      human-readable summary of the compare artifacts
 *
 * Flags can be overridden by V2GSIM_* environment variables (SEED, OUT,
 * WORKERS, BATTERY) for CI use.
 */
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "v2g/io.hpp"
#include "v2g/runner.hpp"

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fleet-scale overnight V2G battery-impact simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, battery_list;
    std::uint64_t seed = 0;
    bool seed_set = false, out_set = false, workers_set = false;
    int workers = 0;

    app.add_option("--config", config_path, "run configuration file (JSON)");
    app.add_option_function<std::string>(
        "--out", [&](const std::string& v) { out_dir = v; out_set = true; },
        "output directory override");
    app.add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t v) { seed = v; seed_set = true; }, "master seed override");
    app.add_option_function<int>(
        "--workers", [&](int v) { workers = v; workers_set = true; }, "worker pool size");
    app.add_option("--battery", battery_list,
                   "battery parameter file(s), comma-separated, overrides the config");

    const char* names[] = {"gen-fleet", "ingest", "cluster", "simulate", "v2g", "compare",
                           "report"};
    const char* descs[] = {"generate a synthetic fleet trip log",
                           "parse trips, infer charging events, export timelines",
                           "extract features and cluster driver behavior",
                           "baseline degradation simulation",
                           "V2G strategy scenario",
                           "per-cluster deltas, tables, tests and regressions",
                           "write a text report from the compare artifacts"};
    for (int i = 0; i < 7; ++i) app.add_subcommand(names[i], descs[i]);

    CLI11_PARSE(app, argc, argv);

    v2g::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = v2g::load_run_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    // environment overrides (CI), then explicit flags
    const std::string env_seed = env_or("V2GSIM_SEED", "");
    if (!env_seed.empty()) cfg.seed = std::stoull(env_seed);
    const std::string env_out = env_or("V2GSIM_OUT", "");
    if (!env_out.empty()) cfg.out_dir = env_out;
    const std::string env_workers = env_or("V2GSIM_WORKERS", "");
    if (!env_workers.empty()) cfg.workers = std::stoi(env_workers);
    const std::string env_battery = env_or("V2GSIM_BATTERY", "");
    if (!env_battery.empty()) cfg.battery_param_files = split_list(env_battery);

    if (seed_set) cfg.seed = seed;
    if (out_set) cfg.out_dir = out_dir;
    if (workers_set) cfg.workers = workers;
    if (!battery_list.empty()) cfg.battery_param_files = split_list(battery_list);

    const std::string sub = app.get_subcommands().front()->get_name();
    std::string error;
    const int rc = v2g::run_subcommand(sub, cfg, error);
    if (rc == 1) std::cerr << "error: " << error << "\n";
    if (rc == 2)
        std::cerr << "error: infeasible V2G plans exceeded the configured tolerance\n";
    if (rc == 0) std::cout << sub << ": ok (artifacts in " << cfg.out_dir << ")\n";
    return rc;
}
