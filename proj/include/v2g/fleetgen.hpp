/*
 * fleetgen.hpp
 *
 * Seeded synthetic fleet generator so the pipeline runs end to end without
 * a telemetry feed. Four shipped behavior profiles (daily home charger,
 * public fast charger, secondary vehicle, threshold charger) are calibrated
 * to published fleet statistics: population share, driving days and charges
 * per week, fast-charge share, and mean SOC before/after charging.
 *
 * The generator emits trips only; charging is implied by the SOC increase
 * across inter-trip gaps, exactly as the ingest stage infers it. Daily trip
 * energy is lognormal with its mean tied to charges_per_week *
 * (soc_after - soc_before) / driving_days_per_week so the charge-frequency
 * and SOC statistics stay mutually consistent. Evening plug-in times peak
 * around 18:00 with a configurable chance that the day's last trip ends
 * after the V2G cutoff instead (late-evening errands), which is what sets
 * realistic overnight-eligibility rates.
 */
#pragma once

#include <string>
#include <vector>

#include "v2g/ingest.hpp"

namespace v2g {

struct ProfileSpec {
    std::string name;
    double population_share = 0.25;
    double driving_days_per_week = 6.0;
    double charges_per_week = 3.0;
    bool home_access = true;
    double fast_charge_fraction = 0.1;   // share of charge events that are DCFC
    double mean_soc_before_charge = 0.5; // fraction
    double mean_soc_after_charge = 0.85;
    double trip_energy_sigma = 0.45;     // lognormal sigma of the daily SOC draw
    double plugin_hour_mean = 18.0;      // evening return, local hours
    double plugin_hour_sd = 1.0;
    double late_evening_prob = 0.45;     // last trip ends after the V2G cutoff
    double overnight_public_prob = 0.0;  // opportunistic overnight AC (no home access)
    double plug_soc_jitter = 0.0;        // occasional early plug-in above the threshold
    double temp_lo_k = 288.0;
    double temp_hi_k = 301.0;

    double mean_daily_draw() const {     // SOC fraction per driving day
        return charges_per_week * (mean_soc_after_charge - mean_soc_before_charge) /
               driving_days_per_week;
    }
    void validate() const;
};

// the four shipped profiles; shares 26 / 19 / 17 / 38 %
std::vector<ProfileSpec> table1_profiles();

std::vector<ProfileSpec> load_profile_specs(const std::string& path);
void save_profile_specs(const std::vector<ProfileSpec>& specs, const std::string& path);

struct GeneratedDriver {
    std::string vehicle_id;
    int profile = 0;  // index into the spec list (ground truth for purity tests)
    std::vector<TripRecord> trips;
};

struct DriverData {
    std::vector<TripRecord> trips;
    std::vector<ChargeEvent> implied_events;
};

// One driver over `months` (365/12-day) months starting 2023-01-01 local.
DriverData generate_driver(const ProfileSpec& spec, std::uint64_t seed, int months);

struct Fleet {
    std::vector<GeneratedDriver> drivers;  // sorted by vehicle_id
    std::vector<ProfileSpec> specs;
};

// Profile counts follow the shares by largest remainder; per-driver seeds
// derive from the master seed, so the fleet is byte-stable for a seed.
Fleet generate_fleet(int n, const std::vector<ProfileSpec>& specs, std::uint64_t seed,
                     int months = 4);

void write_trip_log(const Fleet& fleet, std::ostream& out, std::int64_t utc_offset_s);

// Table-style behavioral statistics recomputed from generated (or ingested)
// data, for calibration audits and reports.
struct BehaviorStats {
    double driving_days_per_week = 0.0;
    double charges_per_week = 0.0;
    double fast_charge_fraction = 0.0;
    double mean_soc_before = 0.0;  // fraction; NaN when no charges
    double mean_soc_after = 0.0;
};
BehaviorStats behavior_stats(const std::vector<TripRecord>& trips,
                             const std::vector<ChargeEvent>& events);

}  // namespace v2g
