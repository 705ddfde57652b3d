/*
 * degradation.hpp
 *
 * Semi-empirical capacity-fade engine in dynamic form. Total loss splits
 * into a closed-form calendar term driven by time-averaged temperature and
 * SOC and an incrementally integrated cycle term driven by instantaneous
 * SOC and C-rate:
 *
 *   q(t)       = q0 - q_loss_cal(t) - q_loss_cyc(t)
 *   cal(t)     = p1 * exp(p2/T_avg) * exp(p3*Ua(soc_avg)/T_avg) * t^p4
 *   dcyc       = (p5 + p6*(1-soc) + p7*|c|) * (exp(p8/T_avg) + exp(-p9/T_avg))
 *                * [(efc+defc)^p10 - efc^p10]
 *
 * The incremental-power form of the cycle update is exact for a piecewise
 * constant prefactor and, unlike a literal forward-Euler step of the
 * derivative, has no EFC^(p10-1) singularity at start of life.
 *
 * Fitted parameters p1..p10 are external inputs loaded from per-design
 * parameter files; t^p4 is evaluated in the time unit of the fit.
 */
#pragma once

#include <string>
#include <vector>

#include "v2g/core.hpp"

namespace v2g {

enum class FitTimeUnit { Days, Years };

struct BatteryParams {
    std::string design_name;
    FitTimeUnit time_unit = FitTimeUnit::Days;
    double q0 = 1.0;  // initial relative capacity
    double p1 = 0, p2 = 0, p3 = 0, p4 = 0.5;          // calendar
    double p5 = 0, p6 = 0, p7 = 0, p8 = 0, p9 = 0;    // cycle prefactor
    double p10 = 1.0;                                 // EFC exponent

    void validate() const;  // p4 > 0, p10 > 0, q0 > 0
};

BatteryParams load_battery_params(const std::string& path);
void save_battery_params(const BatteryParams& p, const std::string& path,
                         const std::string& source_citation);

struct DegradationState {
    double t_s = 0.0;
    double efc = 0.0;
    double q_loss_cal = 0.0;
    double q_loss_cyc = 0.0;
};

struct ScenarioAverages {
    double t_avg_k = 0.0;
    double soc_avg = 0.0;
};

struct Checkpoint {
    double t_s = 0.0;  // elapsed seconds since timeline start
    double q_loss_cal = 0.0;
    double q_loss_cyc = 0.0;
    double q_loss_total = 0.0;  // always cal + cyc, exact
    double efc = 0.0;
};

struct ScenarioResult {
    std::string vehicle_id;
    std::string design_name;
    double q0 = 1.0;
    double t_avg_k = 0.0;
    double soc_avg = 0.0;
    double efc_total = 0.0;
    std::vector<Checkpoint> checkpoints;  // yearly plus the final sample

    // checkpoint at an exact elapsed time; throws InvalidInput if absent
    const Checkpoint& at_seconds(double t_s) const;
    const Checkpoint& at_years(double years) const;
};

struct SimOptions {
    bool efc_halving = true;             // defc = |c|*dt/2 (full cycle = charge + discharge)
    std::int64_t checkpoint_s = 365 * kSecondsPerDay;
};

// Graphite-to-reference potential Ua(soc) in volts, soc in [0,1].
// Non-increasing in soc; throws InvalidInput outside the domain.
double anode_potential(double soc);

// Time-weighted (t_avg_k, soc_avg) over the full timeline handed in; the
// caller passes the scenario-specific (baseline or strategy-modified)
// timeline so calendar aging sees the scenario's SOC profile.
ScenarioAverages scenario_averages(const UsageTimeline& tl);

// Closed-form calendar loss after t_seconds at fixed averages.
double calendar_loss(const BatteryParams& p, double t_seconds, double t_avg_k, double soc_avg);

// One incremental cycle-aging update; defc >= 0, no change when defc = 0.
DegradationState cycle_step(const BatteryParams& p, const DegradationState& s, double soc,
                            double c_rate, double t_avg_k, double defc);

// Walks the timeline in order: per interval defc = |c_rate| * dt_h / 2
// (seams contribute nothing), cycle loss via cycle_step at the interval's
// midpoint SOC, calendar loss from the closed form at every checkpoint.
ScenarioResult simulate(const BatteryParams& p, const UsageTimeline& tl,
                        const SimOptions& opt = {});

}  // namespace v2g
