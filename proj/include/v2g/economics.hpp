/*
 * economics.hpp
 *
 * Dispatch accounting and owner revenue under the proposed time-of-use
 * tariff: energy sent to the grid during the evening peak earns the
 * discharge credit, and its replacement is bought back at the off-peak
 * rate, so net revenue per kWh dispatched is the rate spread. Round-trip
 * efficiency defaults to 1.0 (the tariff arithmetic assumes no loss term)
 * and is exposed for sensitivity runs.
 */
#pragma once

#include <span>

#include "v2g/core.hpp"

namespace v2g {

struct Tariff {
    double discharge_credit_usd_per_kwh = 0.58;   // on-peak, 18:00-21:00
    double offpeak_cost_usd_per_kwh = 0.257;      // off-peak, 21:00-08:00
    double round_trip_efficiency = 1.0;
};

// Total dispatched energy normalized to kWh per 365-day year.
double annual_dispatch(double total_dispatched_kwh, double horizon_years);

// dispatch * (credit - offpeak_cost / efficiency)
double net_revenue(double dispatch_kwh_per_year, const Tariff& tariff);

struct ClusterSummary {
    double mean = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    int n = 0;
    bool ci_defined = false;  // false for singleton clusters
};

// Mean with a seeded percentile-bootstrap 95% CI.
ClusterSummary cluster_summary(std::span<const double> values, std::uint64_t seed,
                               int resamples = 10000);

}  // namespace v2g
