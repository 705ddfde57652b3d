/*
 * Acceptance suite. Each criterion prints a single PASS/FAIL line; the
 * process exits nonzero if any fail.
 *
 *  1 revenue identity of the tariff arithmetic
 *  2 overnight plan arithmetic, exact to the second
 *  3 degradation engine vs a 1 s forward-Euler oracle and analytic calendar
 *  4 strategy invariants over a 200-vehicle synthetic fleet
 *  5 qualitative fleet reproduction (aging-mode ordering, dispatch ordering,
 *    regression signs) with the shipped battery parameter sets
 *  6 clustering recovery (elbow picks 4, >= 90% purity)
 *  7 statistics against exhaustive enumeration oracles
 *  8 pipeline determinism across reruns and worker counts
 */
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "v2g/economics.hpp"
#include "v2g/fleetgen.hpp"
#include "v2g/io.hpp"
#include "v2g/profiles.hpp"
#include "v2g/rng.hpp"
#include "v2g/runner.hpp"
#include "v2g/scheduler.hpp"
#include "v2g/stats.hpp"

using namespace v2g;

namespace {

int g_failures = 0;

struct Criterion {
    std::string detail;
    bool ok = true;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
    void finish(int num, const std::string& name) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s  criterion %d: %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", num, name.c_str(),
                    secs, ok ? "" : " -- ", ok ? "" : detail.c_str());
        std::fflush(stdout);
        if (!ok) ++g_failures;
    }
};

std::string g_data_dir = "/root/proj/data";

std::int64_t tod(int h, int m = 0, int s = 0) { return h * 3600 + m * 60 + s; }

// ---- 1: revenue identity ----------------------------------------------------

void criterion_revenue() {
    Criterion c;
    Tariff t;
    const double rev = net_revenue(1259.0, t);
    c.require(std::abs(rev - 406.66) <= 0.05, "net_revenue(1259) = " + fmt(rev));
    c.require(std::abs(rev - 406.64) <= 0.05, "mismatch vs published 406.64: " + fmt(rev));
    c.finish(1, "revenue identity 1259 kWh/yr -> $406.66 +/- 0.05");
}

// ---- 2: plan arithmetic -------------------------------------------------------

void criterion_plan() {
    Criterion c;
    V2GConfig cfg;
    const std::int64_t day = 200 * kSecondsPerDay;
    ChargeEvent ev;
    ev.plugin_time = day + tod(17, 30);
    ev.depart_time = day + kSecondsPerDay + tod(7);
    ev.soc_start = 0.80;
    ev.soc_target = 0.90;
    ev.kind = ChargeKind::AC_L2;
    ev.sim_power_kw = 9.6;
    const auto plan = plan_v2g(ev, cfg, 71.4);

    const PlanSegment* disch = nullptr;
    const PlanSegment* charge = nullptr;
    for (const auto& s : plan.segments) {
        if (s.soc_end < s.soc_start) disch = &s;
        if (s.soc_end > s.soc_start) charge = &s;
    }
    c.require(disch != nullptr && charge != nullptr, "missing plan phases");
    if (disch && charge) {
        c.require(disch->start == day + tod(18), "discharge start != 18:00:00");
        c.require(disch->end == day + tod(20, 13, 52),
                  "discharge end != 20:13:52, got tod " +
                      std::to_string(local_time_of_day(disch->end)));
        c.require(std::abs(plan.dispatched_kwh - 21.42) <= 0.005,
                  "dispatched != 21.42, got " + fmt(plan.dispatched_kwh));
        c.require(charge->start == day + kSecondsPerDay + tod(1, 1, 30),
                  "charge start != 01:01:30");
        c.require(charge->end == day + kSecondsPerDay + tod(4), "charge end != 04:00:00");
        c.require(std::abs(charge->soc_end - 0.90) <= 1e-9, "target SOC missed");
    }
    c.finish(2, "overnight plan arithmetic exact to the second");
}

// ---- 3: degradation oracle equivalence ----------------------------------------

void criterion_degradation() {
    Criterion c;
    const auto params = load_battery_params(g_data_dir + "/params/unit_test.params");
    const auto tl = test::daily_cycle_timeline(30, 60);
    SimOptions opt;
    const auto res = simulate(params, tl, opt);
    const double oracle = test::euler_cycle_loss(params, tl, opt.efc_halving);
    const double total = res.checkpoints.back().q_loss_total;
    const double diff = std::abs(res.checkpoints.back().q_loss_cyc - oracle);
    c.require(diff < 0.001 * total,
              "cycle integration vs 1s Euler: |" + fmt(res.checkpoints.back().q_loss_cyc) +
                  " - " + fmt(oracle) + "| not within 0.1% of " + fmt(total));

    // calendar closed form: analytic values for p4 = 0.5 and p4 = 1
    BatteryParams half = params;
    half.p4 = 0.5;
    c.require(std::abs(calendar_loss(half, 4.0 * kSecondsPerDay, 296.0, 0.5) - 2.0) < 1e-12,
              "calendar p4=0.5, t=4d != 2");
    BatteryParams lin = params;
    lin.p4 = 1.0;
    c.require(std::abs(calendar_loss(lin, 2.5 * kSecondsPerDay, 296.0, 0.5) - 2.5) < 1e-12,
              "calendar p4=1, t=2.5d != 2.5");
    c.finish(3, "degradation engine vs 1 s Euler oracle (30 days, 0.1%)");
}

// ---- 4: strategy invariant suite ----------------------------------------------

void criterion_strategy_invariants() {
    Criterion c;
    const auto fleet = generate_fleet(200, table1_profiles(), 31337, 4);
    IngestConfig icfg;
    icfg.horizon_years = 1.0;
    V2GConfig vcfg;
    std::size_t violations = 0, checked_events = 0;
    std::string first;

    parallel_for(fleet.drivers.size(), 2, [&](std::size_t i) {
        const auto& d = fleet.drivers[i];
        const auto det = detect_charging_events(d.trips, icfg);
        const auto strat = apply_strategy(d.vehicle_id, d.trips, det.events, vcfg, icfg);
        std::size_t local_viol = 0;
        std::string local_first;
        auto flag = [&](const std::string& what) {
            ++local_viol;
            if (local_first.empty()) local_first = d.vehicle_id + ": " + what;
        };
        for (std::size_t e = 0; e < det.events.size(); ++e) {
            const auto& plan = strat.plans[e];
            if (!plan.v2g) continue;
            const auto& ev = det.events[e];
            const std::int64_t ready =
                (local_day(ev.plugin_time) + 1) * kSecondsPerDay + vcfg.ready_deadline_tod;
            double charged = 0;
            for (const auto& seg : plan.segments) {
                if (seg.soc_end < seg.soc_start) {
                    if (seg.soc_end < vcfg.soc_floor - 1e-12) flag("SOC below floor");
                    if (local_time_of_day(seg.start) < vcfg.discharge_start_tod ||
                        local_time_of_day(seg.end) > vcfg.discharge_end_tod)
                        flag("discharge outside the window");
                }
                if (seg.soc_end > seg.soc_start)
                    charged += (seg.soc_end - seg.soc_start) * icfg.pack_capacity_kwh;
            }
            double soc_at_ready = ev.soc_target;
            bool found = false;
            for (const auto& seg : plan.segments)
                if (seg.start <= ready && ready <= seg.end && seg.end > seg.start) {
                    soc_at_ready = seg.soc_start + (seg.soc_end - seg.soc_start) *
                                                       double(ready - seg.start) /
                                                       double(seg.end - seg.start);
                    found = true;
                    break;
                }
            if (!found) flag("readiness deadline not covered by the plan");
            if (std::abs(soc_at_ready - ev.soc_target) > 1e-6) flag("SOC at 04:00 != target");
            const double balance = plan.dispatched_kwh +
                                   (ev.soc_target - ev.soc_start) * icfg.pack_capacity_kwh;
            if (std::abs(charged - balance) > 1e-6) flag("per-event energy balance broken");
        }
        const auto ext = extend_cyclic(strat.timeline, icfg.horizon_years);
        if (!validate_timeline(ext).empty()) flag("extended timeline fails validation");

        static std::mutex mu;
        std::lock_guard<std::mutex> lk(mu);
        violations += local_viol;
        checked_events += strat.replaced_events;
        if (first.empty() && !local_first.empty()) first = local_first;
    });

    c.require(checked_events > 1000, "too few replaced events: " + std::to_string(checked_events));
    c.require(violations == 0,
              std::to_string(violations) + " violations, first: " + first);
    c.finish(4, "strategy invariants over 200 vehicles (" + std::to_string(checked_events) +
                    " replaced events, zero violations)");
}

// ---- 5: qualitative fleet reproduction -----------------------------------------

void criterion_fleet_reproduction() {
    Criterion c;
    const auto specs = table1_profiles();
    const auto fleet = generate_fleet(200, specs, 424242, 4);
    IngestConfig icfg;
    icfg.horizon_years = 10.0;
    V2GConfig vcfg;
    const std::vector<BatteryParams> designs = {
        load_battery_params(g_data_dir + "/params/lfp_gr.params"),
        load_battery_params(g_data_dir + "/params/nmc_gr_b1.params"),
        load_battery_params(g_data_dir + "/params/nmc_gr_b2.params")};
    SimOptions sopt;

    struct Row {
        int profile;
        double annual_kwh;
        double cal_frac[3];
        double delta_total[3];
    };
    std::vector<Row> rows(fleet.drivers.size());

    parallel_for(fleet.drivers.size(), 2, [&](std::size_t i) {
        const auto& d = fleet.drivers[i];
        const auto det = detect_charging_events(d.trips, icfg);
        const auto base = build_baseline_timeline(d.vehicle_id, d.trips, det.events, icfg);
        const auto base_ext = extend_cyclic(base, icfg.horizon_years);
        const auto strat = apply_strategy(d.vehicle_id, d.trips, det.events, vcfg, icfg);
        const auto v2g_ext = extend_cyclic(strat.timeline, icfg.horizon_years);
        Row r;
        r.profile = d.profile;
        const double span_years = double(strat.timeline.span_seconds()) / (365.0 * 86400.0);
        r.annual_kwh = strat.dispatched_kwh / span_years;
        for (std::size_t k = 0; k < designs.size(); ++k) {
            const auto rb = simulate(designs[k], base_ext, sopt);
            const auto rv = simulate(designs[k], v2g_ext, sopt);
            const auto& cb = rb.at_years(10.0);
            const auto& cv = rv.at_years(10.0);
            r.cal_frac[k] = cb.q_loss_cal / cb.q_loss_total;
            r.delta_total[k] = -(cv.q_loss_total - cb.q_loss_total);
        }
        rows[i] = r;
    });

    // (a) median calendar fraction ordering: NMC B1 > NMC B2 > LFP
    auto median_of = [&](std::size_t design) {
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(r.cal_frac[design]);
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    const double med_lfp = median_of(0), med_b1 = median_of(1), med_b2 = median_of(2);
    c.require(med_b1 > med_b2 && med_b2 > med_lfp,
              "calendar-fraction medians not ordered B1 > B2 > LFP: " + fmt(med_b1) + ", " +
                  fmt(med_b2) + ", " + fmt(med_lfp));

    // (b) dispatch ordering: daily chargers highest, public chargers lowest
    double mean_kwh[4] = {0, 0, 0, 0};
    int n_prof[4] = {0, 0, 0, 0};
    for (const auto& r : rows) {
        mean_kwh[r.profile] += r.annual_kwh;
        n_prof[r.profile] += 1;
    }
    for (int p = 0; p < 4; ++p) mean_kwh[p] /= std::max(1, n_prof[p]);
    c.require(mean_kwh[0] > mean_kwh[1] && mean_kwh[0] > mean_kwh[2] && mean_kwh[0] > mean_kwh[3],
              "daily chargers are not the highest dispatch");
    c.require(mean_kwh[1] < mean_kwh[0] && mean_kwh[1] < mean_kwh[2] && mean_kwh[1] < mean_kwh[3],
              "public chargers are not the lowest dispatch");

    // (c) LFP: capacity change vs dispatch, negative slope with p < 0.001 in
    // every profile
    for (int p = 0; p < 4; ++p) {
        std::vector<double> x, y;
        for (const auto& r : rows)
            if (r.profile == p) {
                x.push_back(r.annual_kwh);
                y.push_back(r.delta_total[0]);
            }
        const auto reg = ols_slope(x, y);
        c.require(reg.slope < 0, "LFP slope not negative in profile " + specs[p].name);
        c.require(reg.p_value < 0.001, "LFP slope p >= 0.001 in profile " + specs[p].name +
                                           " (p = " + fmt(reg.p_value, "%.3g") + ")");
    }
    c.finish(5, "qualitative reproduction on the synthetic fleet (orderings and signs)");
}

// ---- 6: clustering recovery ------------------------------------------------------

void criterion_clustering() {
    Criterion c;
    const auto fleet = generate_fleet(200, table1_profiles(), 777, 4);
    IngestConfig cfg;
    std::vector<FeatureVector> rows(fleet.drivers.size());
    parallel_for(fleet.drivers.size(), 2, [&](std::size_t i) {
        const auto& d = fleet.drivers[i];
        const auto det = detect_charging_events(d.trips, cfg);
        const auto tl = build_baseline_timeline(d.vehicle_id, d.trips, det.events, cfg);
        rows[i] = extract_features(tl, det.events, d.trips, cfg.pack_capacity_kwh);
    });
    auto m = feature_matrix(rows);
    const auto kept = prune_correlated(m, 0.9);
    Eigen::MatrixXd pruned(m.rows(), Eigen::Index(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) pruned.col(Eigen::Index(k)) = m.col(kept[k]);
    pruned = impute_missing(pruned);

    std::vector<double> wcss;
    std::vector<ClusterModel> models;
    for (int k = 1; k <= 8; ++k) {
        models.push_back(kmeans(pruned, k, derive_seed(777, 1000 + std::uint64_t(k))));
        wcss.push_back(models.back().wcss);
    }
    const auto pick = elbow(wcss);
    c.require(pick.k == 4, "elbow selected k = " + std::to_string(pick.k));

    const auto& model = models[3];
    std::map<int, std::map<int, int>> table;
    for (std::size_t i = 0; i < fleet.drivers.size(); ++i)
        table[model.assignment[i]][fleet.drivers[i].profile] += 1;
    int pure = 0;
    for (const auto& [cl, counts] : table) {
        int best = 0;
        for (const auto& [g, cnt] : counts) best = std::max(best, cnt);
        pure += best;
    }
    const double purity = double(pure) / double(fleet.drivers.size());
    c.require(purity >= 0.90, "purity " + fmt(purity, "%.3f") + " below 0.90");
    c.finish(6, "clustering recovery: elbow k = 4, purity " + fmt(100.0 * pure / 200.0, "%.1f") +
                    "% on 200 vehicles");
}

// ---- 7: statistics oracle suite ----------------------------------------------------

void criterion_stats() {
    Criterion c;
    // signed-rank exact path vs exhaustive enumeration, all n in [5, 10]
    Rng rng(606);
    for (int n = 5; n <= 10; ++n) {
        for (int rep = 0; rep < 40; ++rep) {
            std::vector<double> x(static_cast<std::size_t>(n));
            for (auto& v : x) v = rng.gaussian(0.2, 1.0);
            if (rep % 3 == 0)
                for (auto& v : x) v = std::round(v * 2.0) / 2.0;  // force midrank ties
            int nonzero = 0;
            for (double v : x) nonzero += v != 0.0 ? 1 : 0;
            if (nonzero < 5) continue;
            for (auto alt : {Alternative::TwoSided, Alternative::Greater, Alternative::Less}) {
                const auto r = wilcoxon_signed_rank(x, 0.0, alt);
                const double oracle = test::wilcoxon_oracle_p(x, 0.0, alt);
                if (std::abs(r.p_value - oracle) > 1e-12) {
                    c.require(false, "wilcoxon mismatch at n=" + std::to_string(n));
                    break;
                }
            }
        }
    }
    // Mann-Whitney exact path vs full permutation enumeration, combined n <= 12
    for (int n1 = 1; n1 <= 6; ++n1) {
        for (int rep = 0; rep < 20; ++rep) {
            const int n2 = 1 + int(rng.below(std::uint64_t(12 - n1)));
            std::vector<double> a(static_cast<std::size_t>(n1)), b(static_cast<std::size_t>(n2));
            for (auto& v : a) v = std::round(rng.gaussian(0.5, 1.0) * 4.0) / 4.0;
            for (auto& v : b) v = std::round(rng.gaussian(0.0, 1.0) * 4.0) / 4.0;
            for (auto alt : {Alternative::TwoSided, Alternative::Greater, Alternative::Less}) {
                const auto r = mann_whitney_u(a, b, alt);
                const double oracle = test::mwu_oracle_p(a, b, alt);
                if (std::abs(r.p_value - oracle) > 1e-12) {
                    c.require(false, "mwu mismatch at n1=" + std::to_string(n1) + " n2=" +
                                         std::to_string(n2));
                    break;
                }
            }
        }
    }
    // the canonical fixture
    {
        std::vector<double> a{1, 2, 3}, b{4, 5, 6};
        const auto r = mann_whitney_u(a, b, Alternative::Less);
        c.require(std::abs(r.p_value - 0.05) < 1e-12,
                  "{1,2,3} vs {4,5,6} one-sided p != 0.05: " + fmt(r.p_value));
        c.require(r.statistic == 0.0, "U != 0");
    }
    // Kruskal-Wallis two-group case vs z^2 of the tie-free normal MWU
    {
        Rng g(17);
        std::vector<double> a, b;
        for (int i = 0; i < 10; ++i) a.push_back(g.gaussian(0.0, 1.0));
        for (int i = 0; i < 12; ++i) b.push_back(g.gaussian(0.7, 1.0));
        const auto kw = kruskal_wallis(std::vector<std::vector<double>>{a, b});
        MwuOptions opt;
        opt.continuity_correction = false;
        opt.force_normal = true;
        const auto mwu = mann_whitney_u(a, b, Alternative::TwoSided, opt);
        const double mean = 10.0 * 12.0 / 2.0;
        const double sd = std::sqrt(10.0 * 12.0 * 23.0 / 12.0);
        const double z = (mwu.statistic - mean) / sd;
        c.require(std::abs(kw.statistic - z * z) < 1e-9,
                  "KW H != z^2: " + fmt(kw.statistic) + " vs " + fmt(z * z));
    }
    c.finish(7, "statistics exact paths vs enumeration oracles");
}

// ---- 8: determinism ------------------------------------------------------------------

void criterion_determinism() {
    Criterion c;
    auto make_cfg = [&](const std::string& out, int workers) {
        RunConfig cfg;
        cfg.fleet_n = 40;
        cfg.fleet_months = 3;
        cfg.ingest.horizon_years = 1.0;
        cfg.eval_horizon_years = 1.0;
        cfg.battery_param_files = {g_data_dir + "/params/lfp_gr.params",
                                   g_data_dir + "/params/nmc_gr_b1.params"};
        cfg.bootstrap_resamples = 1000;
        cfg.seed = 2718;
        cfg.workers = workers;
        cfg.out_dir = out;
        return cfg;
    };
    const std::string out1 = "/tmp/v2g_acc_det1", out2 = "/tmp/v2g_acc_det2";
    std::filesystem::remove_all(out1);
    std::filesystem::remove_all(out2);
    std::string err;
    for (const char* stage :
         {"gen-fleet", "ingest", "cluster", "simulate", "v2g", "compare", "report"}) {
        if (run_subcommand(stage, make_cfg(out1, 1), err) != 0)
            c.require(false, std::string(stage) + " (workers=1): " + err);
        if (run_subcommand(stage, make_cfg(out2, 4), err) != 0)
            c.require(false, std::string(stage) + " (workers=4): " + err);
    }
    if (c.ok) {
        for (const char* f :
             {"trips.csv", "events.csv", "features.csv", "assignments.csv",
              "baseline_results.csv", "v2g_results.csv", "dispatch.csv", "compare_deltas.csv",
              "cluster_tables.csv", "stats_tests.csv", "regressions.csv"}) {
            if (read_file(out1 + "/" + std::string(f)) != read_file(out2 + "/" + std::string(f))) {
                c.require(false, std::string(f) + " differs between reruns/worker counts");
                break;
            }
        }
    }
    c.finish(8, "byte-identical pipeline outputs across reruns and worker counts");
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--data-dir") g_data_dir = argv[i + 1];

    criterion_revenue();
    criterion_plan();
    criterion_degradation();
    criterion_strategy_invariants();
    criterion_fleet_reproduction();
    criterion_clustering();
    criterion_stats();
    criterion_determinism();

    if (g_failures == 0) std::printf("all acceptance criteria passed\n");
    else std::printf("%d acceptance criteria FAILED\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
