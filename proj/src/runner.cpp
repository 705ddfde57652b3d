#include "v2g/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "v2g/io.hpp"
#include "v2g/profiles.hpp"
#include "v2g/rng.hpp"
#include "v2g/stats.hpp"

namespace v2g {

using nlohmann::json;

static const char* kVersion = "1.0.0";

void RunConfig::validate() const {
    if (trip_log.empty() && fleetgen_spec.empty())
        throw InvalidInput("config: need either trip_log or fleetgen_spec");
    if (!trip_log.empty() && !file_exists(trip_log))
        throw InvalidInput("config: trip log not found: " + trip_log);
    for (const auto& f : battery_param_files)
        if (!file_exists(f)) throw InvalidInput("config: battery parameter file not found: " + f);
    ingest.validate();
    v2g.validate();
    if (fleet_n < 1) throw InvalidInput("config: fleet_n must be >= 1");
    if (workers < 1) throw InvalidInput("config: workers must be >= 1");
    if (eval_horizon_years > ingest.horizon_years)
        throw InvalidInput("config: eval_horizon_years exceeds the simulated horizon");
    if (infeasible_tolerance < 0 || infeasible_tolerance > 1)
        throw InvalidInput("config: infeasible_tolerance outside [0,1]");
}

static std::string tod_str(std::int64_t tod) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d:%02d", int(tod / 3600), int((tod % 3600) / 60));
    return buf;
}

static std::int64_t parse_tod(const std::string& s) {
    int h = 0, m = 0;
    if (std::sscanf(s.c_str(), "%d:%d", &h, &m) < 1 || h < 0 || h > 24 || m < 0 || m > 59)
        throw InvalidInput("config: bad time of day '" + s + "'");
    return h * 3600 + m * 60;
}

std::string RunConfig::canonical_json() const {
    json j;
    j["input"]["trip_log"] = trip_log;
    j["input"]["fleetgen_spec"] = fleetgen_spec;
    j["input"]["fleet_n"] = fleet_n;
    j["input"]["fleet_months"] = fleet_months;
    j["battery_params"] = battery_param_files;
    j["ingest"] = {{"pack_capacity_kwh", ingest.pack_capacity_kwh},
                   {"dcfc_threshold_kw", ingest.dcfc_threshold_kw},
                   {"dcfc_sim_power_kw", ingest.dcfc_sim_power_kw},
                   {"ac_sim_power_kw", ingest.ac_sim_power_kw},
                   {"horizon_years", ingest.horizon_years},
                   {"timeline_step_s", ingest.timeline_step_s},
                   {"utc_offset_hours", ingest.utc_offset_s / 3600.0}};
    j["v2g"] = {{"discharge_start", tod_str(v2g.discharge_start_tod)},
                {"discharge_end", tod_str(v2g.discharge_end_tod)},
                {"discharge_power_kw", v2g.discharge_power_kw},
                {"soc_floor", v2g.soc_floor},
                {"ready_deadline", tod_str(v2g.ready_deadline_tod)},
                {"charge_power_kw", v2g.charge_power_kw},
                {"plugin_by", tod_str(v2g.plugin_by_tod)}};
    j["tariff"] = {{"discharge_credit_usd_per_kwh", tariff.discharge_credit_usd_per_kwh},
                   {"offpeak_cost_usd_per_kwh", tariff.offpeak_cost_usd_per_kwh},
                   {"round_trip_efficiency", tariff.round_trip_efficiency}};
    j["sim"] = {{"efc_halving", sim.efc_halving},
                {"checkpoint_days", sim.checkpoint_s / kSecondsPerDay},
                {"eval_horizon_years", eval_horizon_years}};
    j["clustering"] = {{"k", cluster_k},
                       {"k_max", cluster_k_max},
                       {"correlation_threshold", correlation_threshold},
                       {"standardize", standardize},
                       {"restarts", kmeans_restarts}};
    j["economics"] = {{"bootstrap_resamples", bootstrap_resamples}};
    j["infeasible_tolerance"] = infeasible_tolerance;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    return j.dump(2);
}

RunConfig load_run_config(const std::string& path) {
    json j = json::parse(read_file(path));
    RunConfig c;
    if (j.contains("input")) {
        const auto& in = j["input"];
        c.trip_log = in.value("trip_log", c.trip_log);
        c.fleetgen_spec = in.value("fleetgen_spec", c.fleetgen_spec);
        c.fleet_n = in.value("fleet_n", c.fleet_n);
        c.fleet_months = in.value("fleet_months", c.fleet_months);
    }
    if (j.contains("battery_params"))
        c.battery_param_files = j["battery_params"].get<std::vector<std::string>>();
    if (j.contains("ingest")) {
        const auto& g = j["ingest"];
        c.ingest.pack_capacity_kwh = g.value("pack_capacity_kwh", c.ingest.pack_capacity_kwh);
        c.ingest.dcfc_threshold_kw = g.value("dcfc_threshold_kw", c.ingest.dcfc_threshold_kw);
        c.ingest.dcfc_sim_power_kw = g.value("dcfc_sim_power_kw", c.ingest.dcfc_sim_power_kw);
        c.ingest.ac_sim_power_kw = g.value("ac_sim_power_kw", c.ingest.ac_sim_power_kw);
        c.ingest.horizon_years = g.value("horizon_years", c.ingest.horizon_years);
        c.ingest.timeline_step_s = g.value("timeline_step_s", c.ingest.timeline_step_s);
        if (g.contains("utc_offset_hours"))
            c.ingest.utc_offset_s = std::llround(g["utc_offset_hours"].get<double>() * 3600.0);
    }
    if (j.contains("v2g")) {
        const auto& g = j["v2g"];
        if (g.contains("discharge_start")) c.v2g.discharge_start_tod = parse_tod(g["discharge_start"]);
        if (g.contains("discharge_end")) c.v2g.discharge_end_tod = parse_tod(g["discharge_end"]);
        c.v2g.discharge_power_kw = g.value("discharge_power_kw", c.v2g.discharge_power_kw);
        c.v2g.soc_floor = g.value("soc_floor", c.v2g.soc_floor);
        if (g.contains("ready_deadline")) c.v2g.ready_deadline_tod = parse_tod(g["ready_deadline"]);
        c.v2g.charge_power_kw = g.value("charge_power_kw", c.v2g.charge_power_kw);
        if (g.contains("plugin_by")) c.v2g.plugin_by_tod = parse_tod(g["plugin_by"]);
    }
    if (j.contains("tariff")) {
        const auto& g = j["tariff"];
        c.tariff.discharge_credit_usd_per_kwh =
            g.value("discharge_credit_usd_per_kwh", c.tariff.discharge_credit_usd_per_kwh);
        c.tariff.offpeak_cost_usd_per_kwh =
            g.value("offpeak_cost_usd_per_kwh", c.tariff.offpeak_cost_usd_per_kwh);
        c.tariff.round_trip_efficiency =
            g.value("round_trip_efficiency", c.tariff.round_trip_efficiency);
    }
    if (j.contains("sim")) {
        const auto& g = j["sim"];
        c.sim.efc_halving = g.value("efc_halving", c.sim.efc_halving);
        if (g.contains("checkpoint_days"))
            c.sim.checkpoint_s = std::int64_t(g["checkpoint_days"].get<double>()) * kSecondsPerDay;
        c.eval_horizon_years = g.value("eval_horizon_years", c.eval_horizon_years);
    }
    if (j.contains("clustering")) {
        const auto& g = j["clustering"];
        c.cluster_k = g.value("k", c.cluster_k);
        c.cluster_k_max = g.value("k_max", c.cluster_k_max);
        c.correlation_threshold = g.value("correlation_threshold", c.correlation_threshold);
        c.standardize = g.value("standardize", c.standardize);
        c.kmeans_restarts = g.value("restarts", c.kmeans_restarts);
    }
    if (j.contains("economics"))
        c.bootstrap_resamples = j["economics"].value("bootstrap_resamples", c.bootstrap_resamples);
    c.infeasible_tolerance = j.value("infeasible_tolerance", c.infeasible_tolerance);
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    c.out_dir = j.value("out_dir", c.out_dir);
    return c;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::atomic<bool> failed{false};
    std::string error;
    std::mutex err_mu;
    const int count = std::min<std::size_t>(workers, n);
    for (int w = 0; w < count; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    fn(i);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    failed.store(true);
                    if (error.empty()) error = e.what();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed.load()) throw InvalidInput("worker failure: " + error);
}

// ---- stage helpers -----------------------------------------------------------

static void write_manifest(const RunConfig& cfg, const std::string& stage) {
    std::ostringstream m;
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a(cfg.canonical_json())));
    m << "stage = " << stage << "\n"
      << "config_hash = " << hex << "\n"
      << "seed = " << cfg.seed << "\n"
      << "version = " << kVersion << "\n";
    write_file(cfg.out_dir + "/manifest_" + stage + ".txt", m.str());
}

static std::vector<ProfileSpec> resolve_specs(const RunConfig& cfg) {
    if (cfg.fleetgen_spec == "builtin:table1") return table1_profiles();
    return load_profile_specs(cfg.fleetgen_spec);
}

std::vector<VehicleData> load_fleet_inputs(const RunConfig& cfg) {
    const std::string path =
        !cfg.trip_log.empty() ? cfg.trip_log : cfg.out_dir + "/trips.csv";
    if (!file_exists(path))
        throw InvalidInput("no trip log at " + path + " (run gen-fleet or set input.trip_log)");
    auto by_vehicle = parse_trip_log_file(path, cfg.ingest.utc_offset_s);
    std::vector<VehicleData> out;
    out.reserve(by_vehicle.size());
    for (auto& [vid, trips] : by_vehicle) {
        VehicleData v;
        v.vehicle_id = vid;
        v.events = detect_charging_events(trips, cfg.ingest).events;
        v.trips = std::move(trips);
        out.push_back(std::move(v));
    }
    return out;  // std::map iteration keeps vehicles sorted by id
}

static std::vector<BatteryParams> load_designs(const RunConfig& cfg) {
    if (cfg.battery_param_files.empty())
        throw InvalidInput("no battery parameter files configured");
    std::vector<BatteryParams> out;
    for (const auto& f : cfg.battery_param_files) out.push_back(load_battery_params(f));
    return out;
}

// ---- gen-fleet ----------------------------------------------------------------

static int cmd_gen_fleet(const RunConfig& cfg) {
    const auto specs = resolve_specs(cfg);
    const Fleet fleet = generate_fleet(cfg.fleet_n, specs, cfg.seed, cfg.fleet_months);
    ensure_dir(cfg.out_dir);
    {
        std::ofstream out(cfg.out_dir + "/trips.csv", std::ios::binary);
        write_trip_log(fleet, out, cfg.ingest.utc_offset_s);
    }
    {
        std::ostringstream gt;
        gt << "vehicle_id,profile_index,profile_name\n";
        for (const auto& d : fleet.drivers)
            gt << d.vehicle_id << ',' << d.profile << ',' << specs[std::size_t(d.profile)].name
               << "\n";
        write_file(cfg.out_dir + "/ground_truth.csv", gt.str());
    }
    save_profile_specs(specs, cfg.out_dir + "/profiles_used.cfg");
    write_manifest(cfg, "gen-fleet");
    return 0;
}

// ---- ingest --------------------------------------------------------------------

static int cmd_ingest(const RunConfig& cfg) {
    const auto vehicles = load_fleet_inputs(cfg);
    ensure_dir(cfg.out_dir);
    ensure_dir(cfg.out_dir + "/timelines");
    std::ostringstream ev;
    ev << "vehicle_id,plugin_t,depart_t,soc_start,soc_target,kind,sim_power_kw\n";
    std::ostringstream warn;
    for (const auto& v : vehicles) {
        const auto det = detect_charging_events(v.trips, cfg.ingest);
        for (const auto& e : det.events)
            ev << v.vehicle_id << ',' << e.plugin_time << ',' << e.depart_time << ','
               << fmt(e.soc_start) << ',' << fmt(e.soc_target) << ','
               << (e.kind == ChargeKind::DCFC ? "DCFC" : "AC_L2") << ',' << fmt(e.sim_power_kw)
               << "\n";
        for (const auto& w : det.warnings) warn << v.vehicle_id << ": " << w << "\n";
        const auto tl = build_baseline_timeline(v.vehicle_id, v.trips, v.events, cfg.ingest);
        std::ofstream tf(cfg.out_dir + "/timelines/" + v.vehicle_id + ".csv", std::ios::binary);
        write_timeline_csv(tl, tf);
    }
    write_file(cfg.out_dir + "/events.csv", ev.str());
    write_file(cfg.out_dir + "/ingest_warnings.txt", warn.str());
    write_manifest(cfg, "ingest");
    return 0;
}

// ---- cluster -------------------------------------------------------------------

static int cmd_cluster(const RunConfig& cfg) {
    const auto vehicles = load_fleet_inputs(cfg);
    if (vehicles.size() < 2) throw InvalidInput("cluster: need at least 2 vehicles");
    ensure_dir(cfg.out_dir);

    std::vector<FeatureVector> rows(vehicles.size());
    parallel_for(vehicles.size(), cfg.workers, [&](std::size_t i) {
        const auto& v = vehicles[i];
        const auto tl = build_baseline_timeline(v.vehicle_id, v.trips, v.events, cfg.ingest);
        rows[i] = extract_features(tl, v.events, v.trips, cfg.ingest.pack_capacity_kwh);
    });

    {
        std::ostringstream f;
        f << "vehicle_id";
        for (const char* n : FeatureVector::names()) f << ',' << n;
        f << "\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            f << vehicles[i].vehicle_id;
            for (int c = 0; c < FeatureVector::kCount; ++c) f << ',' << fmt(rows[i][c]);
            f << "\n";
        }
        write_file(cfg.out_dir + "/features.csv", f.str());
    }

    const Eigen::MatrixXd full = feature_matrix(rows);
    const auto retained = prune_correlated(full, cfg.correlation_threshold);
    {
        std::ostringstream r;
        for (int c : retained) r << FeatureVector::names()[std::size_t(c)] << "\n";
        write_file(cfg.out_dir + "/retained_features.txt", r.str());
    }
    Eigen::MatrixXd pruned(full.rows(), Eigen::Index(retained.size()));
    for (std::size_t c = 0; c < retained.size(); ++c)
        pruned.col(Eigen::Index(c)) = full.col(retained[c]);
    pruned = impute_missing(pruned);

    KMeansOptions kopt;
    kopt.restarts = cfg.kmeans_restarts;
    kopt.standardize = cfg.standardize;
    const int k_max = std::min<int>(cfg.cluster_k_max, int(vehicles.size()));
    std::vector<double> wcss;
    std::vector<ClusterModel> models;
    for (int k = 1; k <= k_max; ++k) {
        models.push_back(kmeans(pruned, k, derive_seed(cfg.seed, 1000 + std::uint64_t(k)), kopt));
        wcss.push_back(models.back().wcss);
    }
    {
        std::ostringstream w;
        w << "k,wcss\n";
        for (int k = 1; k <= k_max; ++k) w << k << ',' << fmt(wcss[std::size_t(k - 1)]) << "\n";
        write_file(cfg.out_dir + "/wcss.csv", w.str());
    }
    int k = cfg.cluster_k;
    if (k <= 0) k = elbow(wcss).k;
    if (k > k_max) throw InvalidInput("cluster: configured k exceeds vehicle count");
    const ClusterModel& model = models[std::size_t(k - 1)];
    {
        std::ostringstream a;
        a << "vehicle_id,cluster\n";
        for (std::size_t i = 0; i < vehicles.size(); ++i)
            a << vehicles[i].vehicle_id << ',' << model.assignment[i] << "\n";
        write_file(cfg.out_dir + "/assignments.csv", a.str());
    }
    write_manifest(cfg, "cluster");
    return 0;
}

// ---- simulate / v2g -------------------------------------------------------------

namespace {

struct VehicleSim {
    std::string results_rows;   // per-checkpoint long rows
    std::string summary_row;    // at the eval horizon
    std::string dispatch_row;   // v2g only
    std::size_t events = 0;
    std::size_t infeasible = 0;
};

}  // namespace

static void sim_rows(const RunConfig& cfg, const std::vector<BatteryParams>& designs,
                     const VehicleData& v, const UsageTimeline& extended, VehicleSim& out) {
    std::ostringstream rows, summary;
    for (const auto& params : designs) {
        const auto res = simulate(params, extended, cfg.sim);
        for (const auto& c : res.checkpoints) {
            rows << v.vehicle_id << ',' << params.design_name << ','
                 << fmt(c.t_s / (kDaysPerYear * kSecondsPerDay), "%.6g") << ',' << fmt(c.q_loss_cal)
                 << ',' << fmt(c.q_loss_cyc) << ',' << fmt(c.q_loss_total) << ',' << fmt(c.efc)
                 << "\n";
        }
        const auto& e = res.at_years(cfg.eval_horizon_years);
        summary << v.vehicle_id << ',' << params.design_name << ',' << fmt(res.soc_avg) << ','
                << fmt(res.t_avg_k) << ',' << fmt(res.efc_total) << ','
                << fmt(cfg.eval_horizon_years, "%.6g") << ',' << fmt(e.q_loss_cal) << ','
                << fmt(e.q_loss_cyc) << ',' << fmt(e.q_loss_total) << "\n";
    }
    out.results_rows = rows.str();
    out.summary_row = summary.str();
}

static const char* kResultsHeader =
    "vehicle_id,design,years,q_loss_cal,q_loss_cyc,q_loss_total,efc\n";
static const char* kSummaryHeader =
    "vehicle_id,design,soc_avg,t_avg_k,efc_total,eval_years,q_cal,q_cyc,q_total\n";

static int cmd_simulate(const RunConfig& cfg) {
    const auto vehicles = load_fleet_inputs(cfg);
    const auto designs = load_designs(cfg);
    ensure_dir(cfg.out_dir);
    std::vector<VehicleSim> sims(vehicles.size());
    parallel_for(vehicles.size(), cfg.workers, [&](std::size_t i) {
        const auto& v = vehicles[i];
        const auto base = build_baseline_timeline(v.vehicle_id, v.trips, v.events, cfg.ingest);
        const auto extended = extend_cyclic(base, cfg.ingest.horizon_years);
        sim_rows(cfg, designs, v, extended, sims[i]);
    });
    std::string results = kResultsHeader, summary = kSummaryHeader;
    for (const auto& s : sims) {
        results += s.results_rows;
        summary += s.summary_row;
    }
    write_file(cfg.out_dir + "/baseline_results.csv", results);
    write_file(cfg.out_dir + "/baseline_summary.csv", summary);
    write_manifest(cfg, "simulate");
    return 0;
}

static int cmd_v2g(const RunConfig& cfg) {
    const auto vehicles = load_fleet_inputs(cfg);
    const auto designs = load_designs(cfg);
    ensure_dir(cfg.out_dir);
    std::vector<VehicleSim> sims(vehicles.size());
    parallel_for(vehicles.size(), cfg.workers, [&](std::size_t i) {
        const auto& v = vehicles[i];
        auto strat = apply_strategy(v.vehicle_id, v.trips, v.events, cfg.v2g, cfg.ingest);
        const auto extended = extend_cyclic(strat.timeline, cfg.ingest.horizon_years);
        sim_rows(cfg, designs, v, extended, sims[i]);
        const double base_span_s = double(strat.timeline.span_seconds());
        const double tiles = std::ceil(cfg.ingest.horizon_years * kDaysPerYear * kSecondsPerDay /
                                       base_span_s);
        const double total = strat.dispatched_kwh * tiles;
        const double span_years =
            double(extended.span_seconds()) / (kDaysPerYear * kSecondsPerDay);
        const double annual = annual_dispatch(total, span_years);
        const double revenue = net_revenue(annual, cfg.tariff);
        std::ostringstream d;
        d << v.vehicle_id << ',' << fmt(total) << ',' << fmt(span_years, "%.8g") << ','
          << fmt(annual) << ',' << fmt(revenue) << ',' << strat.replaced_events << ','
          << strat.infeasible_events << "\n";
        sims[i].dispatch_row = d.str();
        sims[i].events = v.events.size();
        sims[i].infeasible = strat.infeasible_events;
    });
    std::string results = kResultsHeader, summary = kSummaryHeader;
    std::string dispatch =
        "vehicle_id,dispatched_kwh_total,span_years,annual_kwh,revenue_usd,replaced_events,"
        "infeasible_events\n";
    std::size_t total_events = 0, total_infeasible = 0;
    for (const auto& s : sims) {
        results += s.results_rows;
        summary += s.summary_row;
        dispatch += s.dispatch_row;
        total_events += s.events;
        total_infeasible += s.infeasible;
    }
    write_file(cfg.out_dir + "/v2g_results.csv", results);
    write_file(cfg.out_dir + "/v2g_summary.csv", summary);
    write_file(cfg.out_dir + "/dispatch.csv", dispatch);
    write_manifest(cfg, "v2g");
    if (total_events > 0 &&
        double(total_infeasible) / double(total_events) > cfg.infeasible_tolerance)
        return 2;
    return 0;
}

// ---- compare --------------------------------------------------------------------

namespace {

struct SummaryRow {
    double q_cal = 0, q_cyc = 0, q_total = 0;
};

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("compare: missing artifact " + path + " (run earlier stages)");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                f.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur += c;
            }
        }
        f.push_back(cur);
        rows.push_back(std::move(f));
    }
    return rows;
}

}  // namespace

static int cmd_compare(const RunConfig& cfg) {
    // inputs: summaries from simulate and v2g, dispatch, cluster assignments
    const auto base_rows = read_csv(cfg.out_dir + "/baseline_summary.csv");
    const auto v2g_rows = read_csv(cfg.out_dir + "/v2g_summary.csv");
    const auto disp_rows = read_csv(cfg.out_dir + "/dispatch.csv");
    const auto assign_rows = read_csv(cfg.out_dir + "/assignments.csv");

    std::map<std::pair<std::string, std::string>, SummaryRow> base, v2gm;
    std::set<std::string> designs_set;
    for (std::size_t i = 1; i < base_rows.size(); ++i) {
        const auto& r = base_rows[i];
        base[{r[0], r[1]}] = {std::stod(r[6]), std::stod(r[7]), std::stod(r[8])};
        designs_set.insert(r[1]);
    }
    for (std::size_t i = 1; i < v2g_rows.size(); ++i) {
        const auto& r = v2g_rows[i];
        v2gm[{r[0], r[1]}] = {std::stod(r[6]), std::stod(r[7]), std::stod(r[8])};
    }
    std::map<std::string, double> annual;  // vehicle -> kWh/yr
    std::map<std::string, double> revenue;
    for (std::size_t i = 1; i < disp_rows.size(); ++i) {
        annual[disp_rows[i][0]] = std::stod(disp_rows[i][3]);
        revenue[disp_rows[i][0]] = std::stod(disp_rows[i][4]);
    }
    std::map<std::string, int> cluster_of;
    std::set<int> clusters;
    for (std::size_t i = 1; i < assign_rows.size(); ++i) {
        cluster_of[assign_rows[i][0]] = std::stoi(assign_rows[i][1]);
        clusters.insert(std::stoi(assign_rows[i][1]));
    }
    const std::vector<std::string> designs(designs_set.begin(), designs_set.end());

    // per-vehicle deltas (capacity change: positive = more capacity retained)
    std::ostringstream deltas;
    deltas << "vehicle_id,cluster,design,annual_dispatch_kwh,delta_total,delta_cycle,delta_"
              "calendar\n";
    // accumulation keyed for the cluster tables and regressions
    std::map<std::string, std::map<int, std::vector<double>>> d_tot, d_cyc, d_cal, x_disp;
    std::map<std::string, std::vector<double>> cal_fraction;
    std::map<std::string, std::map<int, std::vector<double>>> base_tot;
    for (const auto& [key, b] : base) {
        const auto& [vid, design] = key;
        const auto it = v2gm.find(key);
        if (it == v2gm.end()) throw InvalidInput("compare: vehicle " + vid + " missing from v2g");
        const auto cit = cluster_of.find(vid);
        if (cit == cluster_of.end())
            throw InvalidInput("compare: vehicle " + vid + " missing from assignments");
        const int cl = cit->second;
        const double dt = -(it->second.q_total - b.q_total);
        const double dy = -(it->second.q_cyc - b.q_cyc);
        const double dc = -(it->second.q_cal - b.q_cal);
        deltas << vid << ',' << cl << ',' << design << ',' << fmt(annual[vid]) << ',' << fmt(dt)
               << ',' << fmt(dy) << ',' << fmt(dc) << "\n";
        d_tot[design][cl].push_back(dt);
        d_cyc[design][cl].push_back(dy);
        d_cal[design][cl].push_back(dc);
        x_disp[design][cl].push_back(annual[vid]);
        base_tot[design][cl].push_back(b.q_total);
        if (b.q_total > 0) cal_fraction[design].push_back(b.q_cal / b.q_total);
    }
    write_file(cfg.out_dir + "/compare_deltas.csv", deltas.str());

    // cluster tables: strategy deltas, baseline decomposition, dispatch, revenue
    std::ostringstream tab;
    tab << "cluster,design,metric,mean,ci_lo,ci_hi,n\n";
    auto emit_summary = [&](int cl, const std::string& design, const std::string& metric,
                            const std::vector<double>& vals) {
        const auto s = cluster_summary(
            vals, derive_seed(cfg.seed, fnv1a(design + "/" + metric) + std::uint64_t(cl) * 7919),
            cfg.bootstrap_resamples);
        tab << cl << ',' << design << ',' << metric << ',' << fmt(s.mean) << ',' << fmt(s.ci_lo)
            << ',' << fmt(s.ci_hi) << ',' << s.n << "\n";
    };
    std::map<int, std::vector<double>> disp_by_cluster, rev_by_cluster;
    for (const auto& [vid, cl] : cluster_of) {
        if (annual.count(vid)) {
            disp_by_cluster[cl].push_back(annual[vid]);
            rev_by_cluster[cl].push_back(revenue[vid]);
        }
    }
    for (int cl : clusters) {
        emit_summary(cl, "-", "annual_dispatch_kwh", disp_by_cluster[cl]);
        emit_summary(cl, "-", "revenue_usd", rev_by_cluster[cl]);
        for (const auto& design : designs) {
            emit_summary(cl, design, "delta_total", d_tot[design][cl]);
            emit_summary(cl, design, "delta_cycle", d_cyc[design][cl]);
            emit_summary(cl, design, "delta_calendar", d_cal[design][cl]);
            emit_summary(cl, design, "baseline_loss_total", base_tot[design][cl]);
        }
    }
    write_file(cfg.out_dir + "/cluster_tables.csv", tab.str());

    // statistics tables
    std::ostringstream st;
    st << "comparison,statistic,p_value,n1,n2,alternative\n";
    auto emit_test = [&](const std::string& name, const TestResult& t) {
        st << name << ',' << fmt(t.statistic) << ',' << fmt(t.p_value, "%.6g") << ',' << t.n1
           << ',' << t.n2 << ',' << to_string(t.alternative) << "\n";
    };
    for (const auto& design : designs) {
        if (cal_fraction[design].size() >= 5)
            emit_test("wilcoxon_cal_fraction_vs_0.5[" + design + "]",
                      wilcoxon_signed_rank(cal_fraction[design], 0.5, Alternative::TwoSided));
        std::vector<std::vector<double>> groups;
        for (int cl : clusters)
            if (!base_tot[design][cl].empty()) groups.push_back(base_tot[design][cl]);
        if (groups.size() >= 2) {
            emit_test("kruskal_wallis_loss_by_cluster[" + design + "]", kruskal_wallis(groups));
            // pairwise: cluster with the highest mean loss against the others
            int top = *clusters.begin();
            double top_mean = -1;
            for (int cl : clusters) {
                const auto& v = base_tot[design][cl];
                if (v.empty()) continue;
                double m = 0;
                for (double x : v) m += x;
                m /= double(v.size());
                if (m > top_mean) {
                    top_mean = m;
                    top = cl;
                }
            }
            for (int cl : clusters) {
                if (cl == top || base_tot[design][cl].empty()) continue;
                emit_test("mwu_loss[" + design + "] cluster" + std::to_string(top) +
                              ">cluster" + std::to_string(cl),
                          mann_whitney_u(base_tot[design][top], base_tot[design][cl],
                                         Alternative::Greater));
            }
        }
    }
    write_file(cfg.out_dir + "/stats_tests.csv", st.str());

    // regressions: capacity change vs annual dispatch, per design and cluster
    std::ostringstream rg;
    rg << "design,cluster,metric,slope,intercept,stderr,t,p,n\n";
    for (const auto& design : designs) {
        for (int cl : clusters) {
            const auto& x = x_disp[design][cl];
            if (x.size() < 3) continue;
            double vmin = x.front(), vmax = x.front();
            for (double v : x) {
                vmin = std::min(vmin, v);
                vmax = std::max(vmax, v);
            }
            if (vmax - vmin <= 0) continue;  // degenerate design, no regression
            const struct {
                const char* name;
                const std::vector<double>* y;
            } metrics[] = {{"delta_total", &d_tot[design][cl]},
                           {"delta_cycle", &d_cyc[design][cl]},
                           {"delta_calendar", &d_cal[design][cl]}};
            for (const auto& mt : metrics) {
                const auto r = ols_slope(x, *mt.y);
                rg << design << ',' << cl << ',' << mt.name << ',' << fmt(r.slope, "%.8g") << ','
                   << fmt(r.intercept, "%.8g") << ',' << fmt(r.stderr_slope, "%.8g") << ','
                   << fmt(r.t_stat, "%.8g") << ',' << fmt(r.p_value, "%.6g") << ',' << r.n << "\n";
            }
        }
    }
    write_file(cfg.out_dir + "/regressions.csv", rg.str());
    write_manifest(cfg, "compare");
    return 0;
}

// ---- report --------------------------------------------------------------------

static int cmd_report(const RunConfig& cfg) {
    const auto tables = read_csv(cfg.out_dir + "/cluster_tables.csv");
    const auto tests = read_csv(cfg.out_dir + "/stats_tests.csv");
    const auto regs = read_csv(cfg.out_dir + "/regressions.csv");
    std::ostringstream r;
    r << "fleet V2G simulation report\n";
    r << "===========================\n\n";
    r << "per-cluster summaries (mean [95% CI]):\n";
    for (std::size_t i = 1; i < tables.size(); ++i) {
        const auto& t = tables[i];
        r << "  cluster " << t[0] << "  " << t[2] << (t[1] == "-" ? "" : " (" + t[1] + ")")
          << " = " << t[3] << "  [" << t[4] << ", " << t[5] << "]  n=" << t[6] << "\n";
    }
    r << "\nstatistical tests:\n";
    for (std::size_t i = 1; i < tests.size(); ++i) {
        const auto& t = tests[i];
        r << "  " << t[0] << ": statistic=" << t[1] << " p=" << t[2] << " (" << t[5] << ")\n";
    }
    r << "\ncapacity-change vs dispatch regressions:\n";
    for (std::size_t i = 1; i < regs.size(); ++i) {
        const auto& t = regs[i];
        r << "  " << t[0] << " cluster " << t[1] << " " << t[2] << ": slope=" << t[3]
          << " p=" << t[7] << " n=" << t[8] << "\n";
    }
    write_file(cfg.out_dir + "/report.txt", r.str());
    write_manifest(cfg, "report");
    return 0;
}

int run_subcommand(const std::string& name, const RunConfig& cfg, std::string& error_out) {
    try {
        cfg.validate();
        if (name == "gen-fleet") return cmd_gen_fleet(cfg);
        if (name == "ingest") return cmd_ingest(cfg);
        if (name == "cluster") return cmd_cluster(cfg);
        if (name == "simulate") return cmd_simulate(cfg);
        if (name == "v2g") return cmd_v2g(cfg);
        if (name == "compare") return cmd_compare(cfg);
        if (name == "report") return cmd_report(cfg);
        error_out = "unknown subcommand '" + name + "'";
        return 1;
    } catch (const std::exception& e) {
        error_out = e.what();
        return 1;
    }
}

}  // namespace v2g
