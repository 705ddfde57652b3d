#include "v2g/scheduler.hpp"

#include <cmath>

namespace v2g {

void V2GConfig::validate() const {
    if (!(soc_floor > 0.0 && soc_floor < 1.0))
        throw InvalidInput("v2g config: soc_floor must be in (0,1)");
    if (!(discharge_start_tod < discharge_end_tod))
        throw InvalidInput("v2g config: discharge window empty");
    if (!(discharge_power_kw > 0 && charge_power_kw > 0))
        throw InvalidInput("v2g config: powers must be > 0");
}

bool is_eligible(const ChargeEvent& ev, const V2GConfig& cfg) {
    if (ev.kind != ChargeKind::AC_L2) return false;
    if (local_time_of_day(ev.plugin_time) > cfg.plugin_by_tod) return false;
    const std::int64_t ready =
        (local_day(ev.plugin_time) + 1) * kSecondsPerDay + cfg.ready_deadline_tod;
    return ev.depart_time >= ready;
}

EventPlan plan_v2g(const ChargeEvent& ev, const V2GConfig& cfg, double capacity_kwh) {
    cfg.validate();
    if (!is_eligible(ev, cfg)) throw InvalidInput("plan_v2g: event is not eligible");

    const std::int64_t day0 = local_day(ev.plugin_time) * kSecondsPerDay;
    const std::int64_t window_start = day0 + cfg.discharge_start_tod;
    const std::int64_t window_end = day0 + cfg.discharge_end_tod;
    const std::int64_t ready = day0 + kSecondsPerDay + cfg.ready_deadline_tod;

    EventPlan plan;
    plan.v2g = true;

    // phase 1: discharge, clipped by the window and the SOC floor
    const std::int64_t disch_start = std::max(ev.plugin_time, window_start);
    double soc_after = ev.soc_start;
    std::int64_t disch_end = disch_start;
    if (ev.soc_start > cfg.soc_floor && disch_start < window_end) {
        const double floor_hit_s = (ev.soc_start - cfg.soc_floor) * capacity_kwh /
                                   cfg.discharge_power_kw * kSecondsPerHour;
        const std::int64_t full_dur = round_to_second(floor_hit_s);
        disch_end = std::min(window_end, disch_start + full_dur);
        if (disch_end > disch_start) {
            if (disch_end - disch_start == full_dur) {
                soc_after = cfg.soc_floor;  // floor-limited: land exactly on the floor
            } else {
                soc_after = ev.soc_start - cfg.discharge_power_kw *
                                               (double(disch_end - disch_start) / kSecondsPerHour) /
                                               capacity_kwh;
            }
            plan.dispatched_kwh = (ev.soc_start - soc_after) * capacity_kwh;
        } else {
            disch_end = disch_start;
        }
    }

    // phase 3: charge ending exactly at the readiness deadline
    const double need = ev.soc_target - soc_after;
    std::int64_t charge_start = ready;
    std::int64_t charge_end = ready;
    if (need > 0) {
        const std::int64_t charge_dur = std::max<std::int64_t>(
            1, round_to_second(need * capacity_kwh / cfg.charge_power_kw * kSecondsPerHour));
        const std::int64_t earliest = std::max(disch_end, ev.plugin_time);
        charge_start = ready - charge_dur;
        if (charge_start < earliest) {
            // compress the rest to zero and charge right after discharge
            charge_start = earliest;
            charge_end = charge_start + charge_dur;
            if (charge_end > ready)
                throw InfeasiblePlan(
                    "event at t=" + std::to_string(ev.plugin_time) + ": charge of " +
                    std::to_string(charge_dur) + " s cannot finish by the readiness deadline");
        }
    }

    // assemble: lead rest | discharge | rest | charge | tail rest
    auto rest = [&](std::int64_t a, std::int64_t b, double soc) {
        if (b > a) plan.segments.push_back({a, b, soc, soc});
    };
    rest(ev.plugin_time, disch_end > disch_start ? disch_start : charge_start, ev.soc_start);
    if (disch_end > disch_start) {
        plan.segments.push_back({disch_start, disch_end, ev.soc_start, soc_after});
        rest(disch_end, charge_start, soc_after);
    }
    if (charge_end > charge_start)
        plan.segments.push_back({charge_start, charge_end, soc_after, ev.soc_target});
    rest(charge_end, ev.depart_time, ev.soc_target);
    return plan;
}

StrategyResult apply_strategy(const std::string& vehicle_id,
                              const std::vector<TripRecord>& trips,
                              const std::vector<ChargeEvent>& events, const V2GConfig& v2g_cfg,
                              const IngestConfig& ingest_cfg) {
    v2g_cfg.validate();
    StrategyResult res;
    res.plans.reserve(events.size());
    for (const auto& ev : events) {
        if (is_eligible(ev, v2g_cfg)) {
            try {
                auto plan = plan_v2g(ev, v2g_cfg, ingest_cfg.pack_capacity_kwh);
                res.dispatched_kwh += plan.dispatched_kwh;
                res.replaced_events += 1;
                res.plans.push_back(std::move(plan));
                continue;
            } catch (const InfeasiblePlan& e) {
                res.infeasible_events += 1;
                res.warnings.push_back(vehicle_id + ": " + e.what() + "; using baseline plan");
            }
        }
        res.plans.push_back(immediate_plan(ev, ingest_cfg));
    }
    res.timeline = build_timeline(vehicle_id, trips, events, res.plans, ingest_cfg);
    return res;
}

UsageTimeline build_baseline_timeline(const std::string& vehicle_id,
                                      const std::vector<TripRecord>& trips,
                                      const std::vector<ChargeEvent>& events,
                                      const IngestConfig& ingest_cfg) {
    std::vector<EventPlan> plans;
    plans.reserve(events.size());
    for (const auto& ev : events) plans.push_back(immediate_plan(ev, ingest_cfg));
    return build_timeline(vehicle_id, trips, events, plans, ingest_cfg);
}

}  // namespace v2g
