/*
 * scheduler.hpp
 *
 * Overnight V2G strategy. Eligible charging events (AC, plugged in by the
 * evening cutoff, still parked at the readiness deadline next morning) are
 * replaced by a three-phase plan:
 *
 *   1. discharge to the grid during the evening peak window, stopping at the
 *      window end or at the SOC floor, whichever comes first
 *   2. rest
 *   3. charge so the owner's observed target SOC is reached exactly at the
 *      readiness deadline
 *
 * Ineligible events keep the immediate-charge baseline. The SOC floor gates
 * discharge only; a vehicle arriving below the floor simply skips phase 1.
 */
#pragma once

#include <string>
#include <vector>

#include "v2g/ingest.hpp"

namespace v2g {

struct V2GConfig {
    std::int64_t discharge_start_tod = 18 * 3600;  // 18:00 local
    std::int64_t discharge_end_tod = 21 * 3600;    // 21:00 local
    double discharge_power_kw = 9.6;
    double soc_floor = 0.50;
    std::int64_t ready_deadline_tod = 4 * 3600;    // 04:00 local, next day
    double charge_power_kw = 9.6;
    std::int64_t plugin_by_tod = 21 * 3600;        // idle-window start

    void validate() const;
};

// AC event whose idle interval covers [21:00 of the plug-in day, 04:00 of
// the next morning]. SOC relative to the floor plays no role here.
bool is_eligible(const ChargeEvent& ev, const V2GConfig& cfg);

// Build the three-phase plan for an eligible event. Segment boundaries are
// snapped to whole seconds; each segment's rate delivers its exact SOC
// endpoints (implied power within half a second's energy of nominal).
// Throws InfeasiblePlan when the required charge cannot fit between the
// discharge end and the readiness deadline even with zero rest.
EventPlan plan_v2g(const ChargeEvent& ev, const V2GConfig& cfg, double capacity_kwh);

struct StrategyResult {
    UsageTimeline timeline;
    double dispatched_kwh = 0.0;
    std::vector<EventPlan> plans;          // parallel to the input events
    std::size_t replaced_events = 0;
    std::size_t infeasible_events = 0;     // fell back to the baseline plan
    std::vector<std::string> warnings;
};

// Replace every eligible event with its V2G plan (first night only for
// multi-night stays), keep the baseline plan elsewhere, and rebuild the
// vehicle timeline. Infeasible plans are reported and fall back to baseline.
StrategyResult apply_strategy(const std::string& vehicle_id,
                              const std::vector<TripRecord>& trips,
                              const std::vector<ChargeEvent>& events, const V2GConfig& v2g_cfg,
                              const IngestConfig& ingest_cfg);

// Baseline comparison scenario: every event charges immediately on plug-in.
UsageTimeline build_baseline_timeline(const std::string& vehicle_id,
                                      const std::vector<TripRecord>& trips,
                                      const std::vector<ChargeEvent>& events,
                                      const IngestConfig& ingest_cfg);

}  // namespace v2g
