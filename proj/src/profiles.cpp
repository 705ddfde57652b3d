#include "v2g/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "v2g/rng.hpp"

namespace v2g {

const std::array<const char*, FeatureVector::kCount>& FeatureVector::names() {
    static const std::array<const char*, kCount> kNames = {
        "days_driven",
        "trips_logged",
        "hours_in_use",
        "hours_parked",
        "first_day",
        "last_day",
        "charge_sessions",
        "ac_charge_sessions",
        "dcfc_sessions",
        "avg_charge_power_kw",
        "home_charge_sessions",
        "avg_soc_before_charge_pct",
        "avg_soc_after_charge_pct",
        "soc_time_driving_pct_h",
        "hours_in_use_total",
        "soc_time_parked_pct_h",
        "hours_parked_total",
        "avg_soc_driving_pct",
        "soc_consumed_driving_pct",
        "energy_charged_kwh",
        "calendar_days",
        "hours_in_use_all_days",
        "hours_parked_all_days",
        "soc_per_driving_day_pct",
        "soc_per_day_pct",
        "kwh_charged_per_driving_day",
        "kwh_charged_per_day",
        "twa_soc_in_use_pct",
        "twa_soc_parked_pct",
        "trips_per_driving_day",
        "charges_per_driving_day",
        "ac_charges_per_driving_day",
        "dcfc_per_driving_day",
        "trips_recorded",
        "avg_soc_overall_pct",
        "mean_c_rate_charging",
        "mean_c_rate_discharge",
        "efc_from_charging",
        "efc_from_driving",
    };
    return kNames;
}

int FeatureVector::index_of(const std::string& name) {
    const auto& ns = names();
    for (int i = 0; i < kCount; ++i)
        if (name == ns[i]) return i;
    return -1;
}

FeatureVector extract_features(const UsageTimeline& timeline,
                               const std::vector<ChargeEvent>& events,
                               const std::vector<TripRecord>& trips, double capacity_kwh) {
    if (trips.empty()) throw InvalidInput("extract_features: empty usage window");
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    std::set<std::int64_t> days;
    double hours_in_use = 0.0, soc_time_driving = 0.0, soc_consumed = 0.0;
    double soc_driving_weighted = 0.0;
    for (const auto& tr : trips) {
        for (std::int64_t d = local_day(tr.start_time); d <= local_day(tr.end_time - 1); ++d)
            days.insert(d);
        const double dur_h = double(tr.end_time - tr.start_time) / kSecondsPerHour;
        const double mean_soc = 0.5 * (tr.soc_start + tr.soc_end);
        hours_in_use += dur_h;
        soc_time_driving += mean_soc * 100.0 * dur_h;
        soc_driving_weighted += mean_soc * 100.0 * dur_h;
        soc_consumed += (tr.soc_start - tr.soc_end) * 100.0;
    }
    const double span_h =
        double(trips.back().end_time - trips.front().start_time) / kSecondsPerHour;
    const double hours_parked = span_h - hours_in_use;
    const double calendar_days = span_h / 24.0;
    const double n_days = double(days.size());
    const double n_trips = double(trips.size());

    int n_ac = 0, n_dcfc = 0;
    double power_sum = 0.0, soc_before = 0.0, soc_after = 0.0, dsoc_charged = 0.0;
    for (const auto& ev : events) {
        (ev.kind == ChargeKind::AC_L2 ? n_ac : n_dcfc) += 1;
        power_sum += ev.sim_power_kw;
        soc_before += ev.soc_start * 100.0;
        soc_after += ev.soc_target * 100.0;
        dsoc_charged += ev.soc_target - ev.soc_start;
    }

    // timeline integrals: parked SOC time, throughput split, mean rates
    double soc_time_parked = 0.0, parked_h = 0.0;
    double charge_soc_h = 0.0, charge_h = 0.0, drive_soc_h = 0.0, drive_h = 0.0;
    double efc_charge = 0.0, efc_drive = 0.0;
    const auto& s = timeline.samples;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if (timeline.is_seam(i)) continue;
        const double dt_h = double(s[i + 1].t - s[i].t) / kSecondsPerHour;
        const double mid = 0.5 * (s[i].soc + s[i + 1].soc);
        if (s[i].c_rate > 0.0) {
            charge_soc_h += s[i].c_rate * dt_h;  // total dsoc charged
            charge_h += dt_h;
            efc_charge += s[i].c_rate * dt_h / 2.0;
        } else if (s[i].c_rate < 0.0) {
            drive_soc_h += -s[i].c_rate * dt_h;
            drive_h += dt_h;
            efc_drive += -s[i].c_rate * dt_h / 2.0;
        } else {
            soc_time_parked += mid * 100.0 * dt_h;
            parked_h += dt_h;
        }
    }
    const double soc_overall = detail::time_weighted_mean_impl(
        s.size(), [&](std::size_t i) { return double(s[i].t); },
        [&](std::size_t i) { return s[i].soc; });

    const bool has_charges = !events.empty();
    const double n_charges = double(events.size());

    FeatureVector f;
    auto set = [&](const char* name, double v) {
        const int idx = FeatureVector::index_of(name);
        f.values[std::size_t(idx)] = v;
    };
    set("days_driven", n_days);
    set("trips_logged", n_trips);
    set("hours_in_use", hours_in_use);
    set("hours_parked", hours_parked);
    set("first_day", double(local_day(trips.front().start_time)));
    set("last_day", double(local_day(trips.back().end_time)));
    set("charge_sessions", n_charges);
    set("ac_charge_sessions", double(n_ac));
    set("dcfc_sessions", double(n_dcfc));
    set("avg_charge_power_kw", has_charges ? power_sum / n_charges : 0.0);
    // no location signal in the trip-log format; slow AC sessions stand in
    // for home charging
    set("home_charge_sessions", double(n_ac));
    set("avg_soc_before_charge_pct", has_charges ? soc_before / n_charges : nan);
    set("avg_soc_after_charge_pct", has_charges ? soc_after / n_charges : nan);
    set("soc_time_driving_pct_h", soc_time_driving);
    set("hours_in_use_total", hours_in_use);
    set("soc_time_parked_pct_h", soc_time_parked);
    set("hours_parked_total", hours_parked);
    set("avg_soc_driving_pct", hours_in_use > 0 ? soc_driving_weighted / hours_in_use : 0.0);
    set("soc_consumed_driving_pct", soc_consumed);
    const double energy_kwh = dsoc_charged * capacity_kwh;
    set("energy_charged_kwh", energy_kwh);
    set("calendar_days", calendar_days);
    set("hours_in_use_all_days", hours_in_use);
    set("hours_parked_all_days", hours_parked);
    set("soc_per_driving_day_pct", n_days > 0 ? soc_consumed / n_days : 0.0);
    set("soc_per_day_pct", calendar_days > 0 ? soc_consumed / calendar_days : 0.0);
    set("kwh_charged_per_driving_day", n_days > 0 ? energy_kwh / n_days : 0.0);
    set("kwh_charged_per_day", calendar_days > 0 ? energy_kwh / calendar_days : 0.0);
    set("twa_soc_in_use_pct", hours_in_use > 0 ? soc_time_driving / hours_in_use : 0.0);
    set("twa_soc_parked_pct", parked_h > 0 ? soc_time_parked / parked_h : 0.0);
    set("trips_per_driving_day", n_days > 0 ? n_trips / n_days : 0.0);
    set("charges_per_driving_day", n_days > 0 ? n_charges / n_days : 0.0);
    set("ac_charges_per_driving_day", n_days > 0 ? double(n_ac) / n_days : 0.0);
    set("dcfc_per_driving_day", n_days > 0 ? double(n_dcfc) / n_days : 0.0);
    set("trips_recorded", n_trips);
    set("avg_soc_overall_pct", soc_overall * 100.0);
    set("mean_c_rate_charging", charge_h > 0 ? charge_soc_h / charge_h : 0.0);
    set("mean_c_rate_discharge", drive_h > 0 ? drive_soc_h / drive_h : 0.0);
    set("efc_from_charging", efc_charge);
    set("efc_from_driving", efc_drive);
    return f;
}

Eigen::MatrixXd feature_matrix(const std::vector<FeatureVector>& rows) {
    Eigen::MatrixXd m(rows.size(), FeatureVector::kCount);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int c = 0; c < FeatureVector::kCount; ++c) m(Eigen::Index(r), c) = rows[r][c];
    return m;
}

// Pearson r between two columns, ignoring rows where either is NaN
static double pearson(const Eigen::MatrixXd& m, int a, int b) {
    double sa = 0, sb = 0;
    int n = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        if (std::isnan(m(r, a)) || std::isnan(m(r, b))) continue;
        sa += m(r, a);
        sb += m(r, b);
        ++n;
    }
    if (n < 2) return 0.0;
    const double ma = sa / n, mb = sb / n;
    double vaa = 0, vbb = 0, vab = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        if (std::isnan(m(r, a)) || std::isnan(m(r, b))) continue;
        vaa += (m(r, a) - ma) * (m(r, a) - ma);
        vbb += (m(r, b) - mb) * (m(r, b) - mb);
        vab += (m(r, a) - ma) * (m(r, b) - mb);
    }
    if (vaa <= 0 || vbb <= 0) return 0.0;
    return vab / std::sqrt(vaa * vbb);
}

std::vector<int> prune_correlated(const Eigen::MatrixXd& m, double threshold) {
    if (m.rows() < 2) throw InvalidInput("prune_correlated: need at least 2 vehicles");
    std::vector<int> retained;
    for (int c = 0; c < m.cols(); ++c) {
        // drop zero-variance / all-missing columns first
        double mean = 0;
        int n = 0;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            if (!std::isnan(m(r, c))) {
                mean += m(r, c);
                ++n;
            }
        if (n < 2) continue;
        mean /= n;
        double var = 0;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            if (!std::isnan(m(r, c))) var += (m(r, c) - mean) * (m(r, c) - mean);
        if (var <= 0.0) continue;

        bool keep = true;
        for (int kept : retained)
            if (std::abs(pearson(m, kept, c)) > threshold) {
                keep = false;
                break;
            }
        if (keep) retained.push_back(c);
    }
    return retained;
}

Eigen::MatrixXd impute_missing(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out = m;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        std::vector<double> present;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            if (!std::isnan(m(r, c))) present.push_back(m(r, c));
        if (present.empty() || present.size() == std::size_t(m.rows())) continue;
        std::sort(present.begin(), present.end());
        const std::size_t h = present.size() / 2;
        const double median = present.size() % 2 ? present[h] : 0.5 * (present[h - 1] + present[h]);
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            if (std::isnan(out(r, c))) out(r, c) = median;
    }
    return out;
}

static double sq_dist(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    return (a - b).squaredNorm();
}

ClusterModel kmeans(const Eigen::MatrixXd& m, int k, std::uint64_t seed,
                    const KMeansOptions& opt) {
    const Eigen::Index n = m.rows(), d = m.cols();
    if (k < 1) throw InvalidInput("kmeans: k must be >= 1");
    if (n < k) throw InvalidInput("kmeans: k exceeds the number of rows");
    if (m.hasNaN()) throw InvalidInput("kmeans: matrix contains NaN; impute first");

    ClusterModel model;
    model.k = k;
    model.standardized = opt.standardize;
    model.feature_mean = m.colwise().mean();
    model.feature_std = Eigen::VectorXd::Ones(d);
    Eigen::MatrixXd x = m;
    if (opt.standardize) {
        for (Eigen::Index c = 0; c < d; ++c) {
            const double var = (m.col(c).array() - model.feature_mean(c)).square().sum() / n;
            const double sd = std::sqrt(var);
            if (sd > 0) model.feature_std(c) = sd;
            x.col(c) = (m.col(c).array() - model.feature_mean(c)) / model.feature_std(c);
        }
    }

    double best_wcss = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd best_centroids;
    std::vector<int> best_assign;

    for (int restart = 0; restart < opt.restarts; ++restart) {
        Rng rng(derive_seed(seed, std::uint64_t(restart)));
        // k-means++ seeding
        Eigen::MatrixXd cent(k, d);
        cent.row(0) = x.row(Eigen::Index(rng.below(std::uint64_t(n))));
        std::vector<double> d2(static_cast<std::size_t>(n));
        for (int c = 1; c < k; ++c) {
            double total = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                double best = std::numeric_limits<double>::infinity();
                for (int j = 0; j < c; ++j) best = std::min(best, sq_dist(x.row(i), cent.row(j)));
                d2[std::size_t(i)] = best;
                total += best;
            }
            if (total <= 0.0) {
                cent.row(c) = x.row(Eigen::Index(rng.below(std::uint64_t(n))));
                continue;
            }
            double pick = rng.uniform() * total, acc = 0.0;
            Eigen::Index chosen = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[std::size_t(i)];
                if (acc >= pick) {
                    chosen = i;
                    break;
                }
            }
            cent.row(c) = x.row(chosen);
        }

        std::vector<int> assign(std::size_t(n), -1);
        for (int iter = 0; iter < opt.max_iter; ++iter) {
            bool changed = false;
            for (Eigen::Index i = 0; i < n; ++i) {
                int best = 0;
                double bd = sq_dist(x.row(i), cent.row(0));
                for (int c = 1; c < k; ++c) {
                    const double dist = sq_dist(x.row(i), cent.row(c));
                    if (dist < bd) {
                        bd = dist;
                        best = c;
                    }
                }
                if (assign[std::size_t(i)] != best) {
                    assign[std::size_t(i)] = best;
                    changed = true;
                }
            }
            if (!changed) break;
            Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
            std::vector<int> counts(std::size_t(k), 0);
            for (Eigen::Index i = 0; i < n; ++i) {
                sums.row(assign[std::size_t(i)]) += x.row(i);
                counts[std::size_t(assign[std::size_t(i)])] += 1;
            }
            for (int c = 0; c < k; ++c)
                if (counts[std::size_t(c)] > 0) cent.row(c) = sums.row(c) / counts[std::size_t(c)];
                else cent.row(c) = x.row(Eigen::Index(rng.below(std::uint64_t(n))));
        }

        double wcss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            wcss += sq_dist(x.row(i), cent.row(assign[std::size_t(i)]));
        if (wcss < best_wcss) {
            best_wcss = wcss;
            best_centroids = cent;
            best_assign = assign;
        }
    }

    model.centroids = best_centroids;
    model.assignment = best_assign;
    model.wcss = best_wcss;
    return model;
}

ElbowResult elbow(std::span<const double> wcss_by_k) {
    if (wcss_by_k.size() < 3) throw InvalidInput("elbow: need wcss for k_max >= 3");
    ElbowResult res;
    const int k_max = static_cast<int>(wcss_by_k.size());
    for (int i = 1; i < k_max; ++i)
        if (wcss_by_k[std::size_t(i)] > wcss_by_k[std::size_t(i - 1)]) res.non_monotone = true;

    // perpendicular distance from (k, wcss_k) to the chord (1, w1)-(k_max, w_last)
    const double x1 = 1.0, y1 = wcss_by_k.front();
    const double x2 = double(k_max), y2 = wcss_by_k.back();
    const double len = std::hypot(x2 - x1, y2 - y1);
    double best = 0.0;
    int best_k = 1;
    for (int k = 1; k <= k_max; ++k) {
        const double dist =
            std::abs((y2 - y1) * k - (x2 - x1) * wcss_by_k[std::size_t(k - 1)] + x2 * y1 - y2 * x1) /
            len;
        if (dist > best + 1e-12) {
            best = dist;
            best_k = k;
        }
    }
    const double scale = std::max({std::abs(y1), std::abs(y2), 1.0});
    if (best <= 1e-9 * scale) {
        res.degenerate = true;
        res.k = 1;
        return res;
    }
    res.k = best_k;
    return res;
}

}  // namespace v2g
