/*
 * runner.hpp
 *
 * Declarative pipeline runner behind the CLI. A single RunConfig drives the
 * subcommands; every artifact a stage writes is a pure function of the
 * config (seeds included), so reruns are byte-identical regardless of the
 * worker count.
 *
 * Stage order and artifacts (all under out_dir):
 *   gen-fleet   trips.csv, ground_truth.csv, profiles_used.cfg
 *   ingest      events.csv, timelines/<vehicle>.csv, ingest_warnings.txt
 *   cluster     features.csv, retained_features.txt, wcss.csv,
 *               assignments.csv
 *   simulate    baseline_results.csv, baseline_summary.csv
 *   v2g         v2g_results.csv, v2g_summary.csv, dispatch.csv
 *   compare     compare_deltas.csv, cluster_tables.csv, stats_tests.csv,
 *               regressions.csv
 *   report      report.txt
 * plus manifest_<stage>.txt with the config hash and seed.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "v2g/degradation.hpp"
#include "v2g/economics.hpp"
#include "v2g/fleetgen.hpp"
#include "v2g/ingest.hpp"
#include "v2g/scheduler.hpp"

namespace v2g {

struct RunConfig {
    // exactly one input source
    std::string trip_log;                      // path to an existing trip log
    std::string fleetgen_spec = "builtin:table1";  // or a profile spec file
    int fleet_n = 200;
    int fleet_months = 4;

    std::vector<std::string> battery_param_files;

    IngestConfig ingest;
    V2GConfig v2g;
    Tariff tariff;
    SimOptions sim;

    int cluster_k = 0;  // 0 = choose by elbow
    int cluster_k_max = 8;
    double correlation_threshold = 0.9;
    bool standardize = true;
    int kmeans_restarts = 10;

    double eval_horizon_years = 10.0;
    int bootstrap_resamples = 10000;
    double infeasible_tolerance = 0.05;  // exit 2 above this fraction of events

    std::uint64_t seed = 42;
    int workers = 2;
    std::string out_dir = "out";

    void validate() const;
    std::string canonical_json() const;  // stable dump used for the manifest hash
};

RunConfig load_run_config(const std::string& path);

// exit codes: 0 ok, 1 validation error, 2 infeasible-plan budget exceeded
int run_subcommand(const std::string& name, const RunConfig& cfg, std::string& error_out);

// in-memory fleet view shared by the stages
struct VehicleData {
    std::string vehicle_id;
    std::vector<TripRecord> trips;
    std::vector<ChargeEvent> events;
};

std::vector<VehicleData> load_fleet_inputs(const RunConfig& cfg);

// simple fixed-size worker pool; fn(i) runs once for each i in [0, n)
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace v2g
