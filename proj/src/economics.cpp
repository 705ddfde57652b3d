#include "v2g/economics.hpp"

#include <algorithm>
#include <cmath>

#include "v2g/rng.hpp"

namespace v2g {

double annual_dispatch(double total_dispatched_kwh, double horizon_years) {
    if (horizon_years <= 0.0) throw InvalidInput("annual_dispatch: horizon must be positive");
    if (total_dispatched_kwh < 0.0) throw InvalidInput("annual_dispatch: negative dispatch");
    return total_dispatched_kwh / horizon_years;
}

double net_revenue(double dispatch_kwh_per_year, const Tariff& tariff) {
    if (dispatch_kwh_per_year < 0.0) throw InvalidInput("net_revenue: negative dispatch");
    return dispatch_kwh_per_year *
           (tariff.discharge_credit_usd_per_kwh -
            tariff.offpeak_cost_usd_per_kwh / tariff.round_trip_efficiency);
}

ClusterSummary cluster_summary(std::span<const double> values, std::uint64_t seed, int resamples) {
    if (values.empty()) throw InvalidInput("cluster_summary: empty cluster");
    ClusterSummary s;
    s.n = static_cast<int>(values.size());
    double m = 0.0;
    for (double v : values) m += v;
    s.mean = m / s.n;
    if (s.n < 2) return s;  // singleton: mean only, CI undefined

    Rng rng(seed);
    std::vector<double> means(resamples);
    for (int r = 0; r < resamples; ++r) {
        double acc = 0.0;
        for (int i = 0; i < s.n; ++i) acc += values[rng.below(values.size())];
        means[r] = acc / s.n;
    }
    std::sort(means.begin(), means.end());
    auto pct = [&](double q) {
        const double pos = q * (resamples - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const double frac = pos - double(lo);
        return lo + 1 < means.size() ? means[lo] * (1.0 - frac) + means[lo + 1] * frac
                                     : means[lo];
    };
    s.ci_lo = pct(0.025);
    s.ci_hi = pct(0.975);
    s.ci_defined = true;
    return s;
}

}  // namespace v2g
