#include "v2g/core.hpp"

#include <algorithm>
#include <cmath>

namespace v2g {

bool UsageTimeline::is_seam(std::size_t i) const {
    return std::binary_search(seam_marks.begin(), seam_marks.end(), i);
}

double time_weighted_mean(std::span<const double> t, std::span<const double> values) {
    if (t.size() != values.size()) throw InvalidInput("time_weighted_mean: size mismatch");
    return detail::time_weighted_mean_impl(
        t.size(), [&](std::size_t i) { return t[i]; }, [&](std::size_t i) { return values[i]; });
}

std::vector<TimelineViolation> validate_timeline(const UsageTimeline& tl) {
    std::vector<TimelineViolation> out;
    const auto& s = tl.samples;
    if (s.size() < 2) {
        out.push_back({0, "min samples", "timeline has fewer than 2 samples"});
        return out;
    }
    constexpr double kRateTol = 1e-9;  // |dsoc| vs |c_rate|*dt consistency
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].soc < 0.0 || s[i].soc > 1.0)
            out.push_back({i, "soc range", "soc " + std::to_string(s[i].soc) + " outside [0,1]"});
        if (!(s[i].temp_k > 0.0))
            out.push_back({i, "temp positive", "temperature must be > 0 K"});
        if (i + 1 < s.size()) {
            if (s[i + 1].t <= s[i].t) {
                out.push_back({i + 1, "time order", "t not strictly increasing"});
                continue;
            }
            const double dt_h = double(s[i + 1].t - s[i].t) / kSecondsPerHour;
            if (tl.is_seam(i)) {
                if (s[i].c_rate != 0.0)
                    out.push_back({i, "seam rate", "c_rate must be 0 across a seam"});
            } else {
                const double dsoc = s[i + 1].soc - s[i].soc;
                if (std::abs(std::abs(dsoc) - std::abs(s[i].c_rate) * dt_h) > kRateTol)
                    out.push_back({i, "rate consistency",
                                   "|dsoc| != |c_rate|*dt at non-seam interval"});
            }
        }
    }
    return out;
}

std::int64_t round_to_second(double seconds) {
    const double f = std::floor(seconds);
    const double frac = seconds - f;
    const auto lo = static_cast<std::int64_t>(f);
    constexpr double kTieTol = 1e-6;
    if (std::abs(frac - 0.5) <= kTieTol) return (lo % 2 == 0) ? lo : lo + 1;
    return frac < 0.5 ? lo : lo + 1;
}

std::int64_t local_time_of_day(std::int64_t t) {
    std::int64_t r = t % kSecondsPerDay;
    return r < 0 ? r + kSecondsPerDay : r;
}

std::int64_t local_day(std::int64_t t) {
    return (t - local_time_of_day(t)) / kSecondsPerDay;
}

}  // namespace v2g
