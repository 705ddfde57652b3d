/*
 * ingest.hpp
 *
 * Trip-log parsing, charging-event inference, timeline synthesis and cyclic
 * extension to multi-year horizons.
 *
 * Trip-log exchange format (comma-separated text):
 *   vehicle_id,trip_start,trip_end,soc_start_pct,soc_end_pct,mean_temp_c
 * with ISO-8601 timestamps carrying a UTC offset. Internally all times are
 * seconds on one run-local wall clock (utc_offset_s per run, DST ignored).
 *
 * A charging event is inferred for every inter-trip gap with a SOC increase.
 * Average power = energy / gap duration classifies it: above the AC Level-2
 * limit it is DCFC (simulated at a constant 100 kW), otherwise AC (simulated
 * at 9.6 kW, or at the inferred average when that exceeds 9.6 kW, so the
 * observed target SOC is reachable within the observed gap).
 */
#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "v2g/core.hpp"

namespace v2g {

struct IngestConfig {
    double pack_capacity_kwh = 71.4;
    double dcfc_threshold_kw = 19.2;   // above this inferred power -> DCFC
    double dcfc_sim_power_kw = 100.0;
    double ac_sim_power_kw = 9.6;
    double horizon_years = 15.0;
    std::int64_t timeline_step_s = 60;  // interior sampling of active segments
    std::int64_t utc_offset_s = -8 * 3600;  // run-local clock (California)

    void validate() const;
};

// One constant-rate piece of a charge plan. SOC endpoints are exact; the
// implied rate dsoc/dt absorbs any sub-second residual from snapping the
// boundaries to whole seconds (well under 0.01% of nominal power).
struct PlanSegment {
    std::int64_t start = 0;
    std::int64_t end = 0;
    double soc_start = 0.0;
    double soc_end = 0.0;

    double c_rate_per_h() const {
        return (soc_end - soc_start) / (double(end - start) / kSecondsPerHour);
    }
};

// Segments tile [event.plugin_time, event.depart_time] exactly.
struct EventPlan {
    std::vector<PlanSegment> segments;
    double dispatched_kwh = 0.0;  // energy sent to the grid (V2G plans only)
    bool v2g = false;
};

struct DetectResult {
    std::vector<ChargeEvent> events;
    std::vector<std::string> warnings;  // infeasible gaps excluded, SOC drops
};

// Parse a trip log; trips per vehicle ordered and validated (no overlap,
// end > start, soc in range, no mid-trip SOC gain). Percent and celsius
// fields converted at this boundary. Throws ParseError / InvalidInput.
std::map<std::string, std::vector<TripRecord>> parse_trip_log(std::istream& in,
                                                              std::int64_t utc_offset_s);
std::map<std::string, std::vector<TripRecord>> parse_trip_log_file(const std::string& path,
                                                                   std::int64_t utc_offset_s);

DetectResult detect_charging_events(const std::vector<TripRecord>& trips,
                                    const IngestConfig& cfg);

// Immediate-charge plan: charging starts at plug-in and stops once the
// target SOC is reached, then the vehicle rests until departure.
EventPlan immediate_plan(const ChargeEvent& ev, const IngestConfig& cfg);

// Piecewise timeline over [first trip start, last trip end]: linear SOC at
// the implied rate during trips, plan segments inside gaps, temperature
// carried forward from the previous trip. plans runs parallel to events.
// Gaps with a SOC discrepancy and no event become one-second seam jumps.
UsageTimeline build_timeline(const std::string& vehicle_id,
                             const std::vector<TripRecord>& trips,
                             const std::vector<ChargeEvent>& events,
                             const std::vector<EventPlan>& plans, const IngestConfig& cfg);

// Tile the base timeline until its span covers horizon_years (365-day
// years). Tile boundaries become one-second seam intervals: zero rate, SOC
// jumping from the base end value back to the base start value.
UsageTimeline extend_cyclic(const UsageTimeline& base, double horizon_years);

// ISO-8601 with offset ("2023-01-15T18:30:00-08:00" or trailing 'Z') to
// run-local wall-clock seconds. Throws ParseError with the given line.
std::int64_t parse_iso8601(const std::string& text, std::int64_t utc_offset_s, long line = 0);
std::string format_iso8601(std::int64_t local_s, std::int64_t utc_offset_s);

void write_timeline_csv(const UsageTimeline& tl, std::ostream& out);
UsageTimeline read_timeline_csv(const std::string& vehicle_id, std::istream& in);

}  // namespace v2g
