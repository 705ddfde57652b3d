/*
 * core.hpp
 *
 * Shared data model for the fleet simulator: per-vehicle usage timelines
 * (SOC / C-rate / pack temperature), trip and charge-event records, and the
 * time-weighted averaging used by the aging equations.
 *
 * Conventions:
 *   - time        int64 seconds on a local wall clock (one timezone per run)
 *   - soc         fraction in [0,1]; file formats use percent, converted at
 *                 the boundary
 *   - c_rate      signed, per hour; positive = charging
 *   - temperature kelvin internally; ingestion accepts celsius
 */
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace v2g {

constexpr double kSecondsPerHour = 3600.0;
constexpr std::int64_t kSecondsPerDay = 86400;
// one simulation year is 365 days throughout (checkpoints, rates, tiling)
constexpr double kDaysPerYear = 365.0;

// thrown when a caller violates an operation precondition
class InvalidInput : public std::runtime_error {
public:
    explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

// thrown when a charge/discharge plan cannot satisfy its constraints
class InfeasiblePlan : public std::runtime_error {
public:
    explicit InfeasiblePlan(const std::string& what) : std::runtime_error(what) {}
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, long line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_number(line) {}
    long line_number;
};

struct TimelineSample {
    std::int64_t t = 0;   // seconds
    double soc = 0.0;     // [0,1]
    double c_rate = 0.0;  // rate over the interval starting at this sample, 1/h
    double temp_k = 0.0;
};

// Ordered samples for one vehicle. A sample's c_rate applies to the interval
// [t_i, t_{i+1}); the final sample's c_rate is ignored. seam_marks lists the
// left sample index of every interval where SOC may jump discontinuously
// with zero throughput (cyclic-extension seams).
struct UsageTimeline {
    std::string vehicle_id;
    std::vector<TimelineSample> samples;
    std::vector<std::size_t> seam_marks;  // sorted ascending

    bool is_seam(std::size_t i) const;
    std::int64_t span_seconds() const {
        return samples.empty() ? 0 : samples.back().t - samples.front().t;
    }
};

struct TripRecord {
    std::int64_t start_time = 0;
    std::int64_t end_time = 0;
    double soc_start = 0.0;
    double soc_end = 0.0;
    double mean_temp_k = 0.0;
};

enum class ChargeKind { AC_L2, DCFC };

struct ChargeEvent {
    std::int64_t plugin_time = 0;  // preceding trip end
    std::int64_t depart_time = 0;  // next trip start
    double soc_start = 0.0;
    double soc_target = 0.0;
    ChargeKind kind = ChargeKind::AC_L2;
    double sim_power_kw = 0.0;  // nominal constant charging power
};

struct TimelineViolation {
    std::size_t index = 0;
    std::string rule;
    std::string message;
};

// Trapezoidal time-weighted mean of an ordered (t, value) series:
//   sum_i (v_i + v_{i+1})/2 * dt_i / (t_N - t_0)
// Throws InvalidInput on fewer than 2 points or non-increasing t.
double time_weighted_mean(std::span<const double> t, std::span<const double> values);

// Empty result iff every UsageTimeline invariant holds; violations name the
// offending sample index and rule ("min samples", "time order", "soc range",
// "temp positive", "rate consistency", "seam rate").
std::vector<TimelineViolation> validate_timeline(const UsageTimeline& tl);

// Nearest-second rounding with half-to-even tie break. Values within 1e-6 s
// of an exact half are treated as ties so that float noise in
// soc*capacity/power arithmetic cannot flip a boundary by a second.
std::int64_t round_to_second(double seconds);

std::int64_t local_time_of_day(std::int64_t t);  // seconds since local midnight
std::int64_t local_day(std::int64_t t);          // floor division by 86400

namespace detail {

// shared trapezoid kernel; t_at/v_at index an ordered series of size n
template <class TimeAt, class ValueAt>
double time_weighted_mean_impl(std::size_t n, TimeAt t_at, ValueAt v_at) {
    if (n < 2) throw InvalidInput("time_weighted_mean: need at least 2 points");
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double dt = t_at(i + 1) - t_at(i);
        if (dt <= 0.0) throw InvalidInput("time_weighted_mean: t must be strictly increasing");
        acc += 0.5 * (v_at(i) + v_at(i + 1)) * dt;
    }
    return acc / (t_at(n - 1) - t_at(0));
}

}  // namespace detail

}  // namespace v2g
