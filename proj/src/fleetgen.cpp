#include "v2g/fleetgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>

#include "v2g/rng.hpp"

namespace v2g {

namespace {

// generation starts at local midnight, 2023-01-01
constexpr std::int64_t kStartDay = 19358;  // days since 1970-01-01
constexpr double kPackKwh = 71.4;
constexpr double kDcfcCap = 0.80;        // public fast-charge upper limit
constexpr double kMinSoc = 0.08;         // urgent-charge guard

std::int64_t hsec(double hours) { return std::int64_t(std::llround(hours * 3600.0)); }

}  // namespace

void ProfileSpec::validate() const {
    if (population_share < 0 || population_share > 1)
        throw InvalidInput("profile '" + name + "': population_share outside [0,1]");
    if (driving_days_per_week <= 0 || driving_days_per_week > 7)
        throw InvalidInput("profile '" + name + "': driving_days_per_week outside (0,7]");
    if (charges_per_week <= 0)
        throw InvalidInput("profile '" + name + "': charges_per_week must be > 0");
    if (fast_charge_fraction < 0 || fast_charge_fraction > 1)
        throw InvalidInput("profile '" + name + "': fast_charge_fraction outside [0,1]");
    if (!(mean_soc_after_charge > mean_soc_before_charge))
        throw InvalidInput("profile '" + name + "': soc_after must exceed soc_before");
    if (mean_soc_before_charge < 0 || mean_soc_after_charge > 1)
        throw InvalidInput("profile '" + name + "': SOC bounds outside [0,1]");
    if (mean_daily_draw() > 0.6)
        throw InvalidInput("profile '" + name +
                           "': implied daily draw exceeds 60% of the pack; spec infeasible");
    if (temp_lo_k <= 0 || temp_hi_k < temp_lo_k)
        throw InvalidInput("profile '" + name + "': bad temperature range");
}

std::vector<ProfileSpec> table1_profiles() {
    std::vector<ProfileSpec> v(4);
    v[0].name = "Daily Charger";
    v[0].population_share = 0.26;
    v[0].driving_days_per_week = 6.43;
    v[0].charges_per_week = 6.11;
    v[0].home_access = true;
    v[0].fast_charge_fraction = 0.0401;
    v[0].mean_soc_before_charge = 0.647;
    v[0].mean_soc_after_charge = 0.892;
    v[0].late_evening_prob = 0.62;

    v[1].name = "Public Charger";
    v[1].population_share = 0.19;
    v[1].driving_days_per_week = 6.41;
    v[1].charges_per_week = 3.34;
    v[1].home_access = false;
    v[1].fast_charge_fraction = 0.741;
    v[1].mean_soc_before_charge = 0.381;
    v[1].mean_soc_after_charge = 0.747;
    v[1].plugin_hour_mean = 12.0;
    v[1].plugin_hour_sd = 2.0;
    v[1].late_evening_prob = 0.0;
    v[1].overnight_public_prob = 0.04;

    v[2].name = "BEV 2nd Vehicle";
    v[2].population_share = 0.17;
    v[2].driving_days_per_week = 4.74;
    v[2].charges_per_week = 1.87;
    v[2].home_access = true;
    v[2].fast_charge_fraction = 0.138;
    v[2].mean_soc_before_charge = 0.543;
    v[2].mean_soc_after_charge = 0.870;
    v[2].late_evening_prob = 0.25;
    v[2].plug_soc_jitter = 0.17;

    v[3].name = "Threshold Charger";
    v[3].population_share = 0.38;
    v[3].driving_days_per_week = 6.44;
    v[3].charges_per_week = 2.57;
    v[3].home_access = true;
    v[3].fast_charge_fraction = 0.117;
    v[3].mean_soc_before_charge = 0.461;
    v[3].mean_soc_after_charge = 0.850;
    v[3].late_evening_prob = 0.45;
    v[3].plug_soc_jitter = 0.15;
    return v;
}

namespace {

struct DriverState {
    double soc = 0.85;
    std::vector<TripRecord> trips;
    double temp_k = 294.0;
};

// one trip depleting `draw`, appended with basic ordering guards
void push_trip(DriverState& st, double start_h_abs, double dur_h, double draw) {
    TripRecord tr;
    tr.start_time = hsec(start_h_abs);
    if (!st.trips.empty())
        tr.start_time = std::max(tr.start_time, st.trips.back().end_time + 300);
    tr.end_time = tr.start_time + std::max<std::int64_t>(hsec(dur_h), 300);
    tr.soc_start = st.soc;
    tr.soc_end = st.soc - draw;
    tr.mean_temp_k = st.temp_k;
    st.soc = tr.soc_end;
    st.trips.push_back(tr);
}

}  // namespace

DriverData generate_driver(const ProfileSpec& spec, std::uint64_t seed, int months) {
    spec.validate();
    if (months < 1) throw InvalidInput("generate_driver: months must be >= 1");
    const int days = int(std::lround(months * kDaysPerYear / 12.0));

    Rng rng(seed);
    DriverState st;
    st.temp_k = rng.uniform(spec.temp_lo_k, spec.temp_hi_k);

    // per-driver traits around the profile means
    const double draw_mean =
        std::clamp(spec.mean_daily_draw() * std::exp(rng.gaussian(0.0, 0.12)), 0.02, 0.55);
    const double sigma = spec.trip_energy_sigma;
    const double draw_mu = std::log(draw_mean) - 0.5 * sigma * sigma;
    const double after_mean = std::clamp(spec.mean_soc_after_charge + rng.gaussian(0.0, 0.02),
                                         spec.mean_soc_before_charge + 0.15, 0.98);
    const double before_mean = std::clamp(spec.mean_soc_before_charge + rng.gaussian(0.0, 0.035),
                                          0.12, after_mean - 0.12);
    const double night_trigger = before_mean + 0.5 * draw_mean;   // post-evening SOC
    const double midday_trigger = before_mean + 0.25 * draw_mean; // post-morning SOC
    const double late_prob = std::clamp(spec.late_evening_prob + rng.gaussian(0.0, 0.08), 0.0, 0.95);
    const double drive_prob = std::clamp(
        spec.driving_days_per_week / 7.0 * (1.0 + rng.gaussian(0.0, 0.03)), 0.05, 1.0);
    // daily chargers plug in nearly every driving night; others on threshold
    const bool nightly = spec.charges_per_week / spec.driving_days_per_week > 0.8;
    const double nightly_skip =
        nightly ? std::clamp(1.0 - spec.charges_per_week / spec.driving_days_per_week, 0.0, 0.5)
                : 0.0;
    // occasional fast stops for home profiles, sized so the event mix matches
    const double fast_day_prob =
        spec.home_access
            ? spec.fast_charge_fraction * spec.charges_per_week / spec.driving_days_per_week
            : 0.0;

    auto charge_target = [&](double lo_guard, double cap) {
        return std::clamp(after_mean + rng.gaussian(0.0, 0.02), lo_guard, cap);
    };

    st.soc = after_mean;

    for (int day = 0; day < days; ++day) {
        const double day_h = (kStartDay + day) * 24.0;
        if (!rng.bernoulli(drive_prob)) continue;

        const double draw = std::min(rng.lognormal(draw_mu, sigma), 0.9 * (after_mean - kMinSoc));
        const double m_share = rng.uniform(0.35, 0.65);

        // morning leg
        push_trip(st, day_h + rng.uniform(6.8, 9.0), rng.uniform(0.4, 1.0),
                  std::min(draw * m_share, std::max(0.0, st.soc - kMinSoc)));

        // midday charge stop: public chargers on their threshold, home
        // profiles on the occasional fast-stop lottery
        bool midday_charge = false;
        bool fast_stop = false;
        if (!spec.home_access) {
            const double rest_of_day = draw * (1.0 - m_share);
            midday_charge = st.soc <= midday_trigger || st.soc - rest_of_day < kMinSoc;
            fast_stop = midday_charge && rng.bernoulli(spec.fast_charge_fraction);
        } else if (rng.bernoulli(fast_day_prob)) {
            midday_charge = fast_stop = true;
        }
        if (midday_charge) {
            double target, gap_h;
            if (fast_stop) {
                target = std::min(kDcfcCap, charge_target(st.soc + 0.05, 0.98));
                if (target <= st.soc + 0.01) target = std::min(st.soc + 0.05, 0.98);
                // short stop: the whole inter-trip gap at 40-85 kW implied power
                gap_h = (target - st.soc) * kPackKwh / rng.uniform(40.0, 85.0);
            } else {
                target = charge_target(st.soc + 0.05, 0.95);
                if (target <= st.soc + 0.01) target = std::min(st.soc + 0.05, 0.95);
                // long Level-2 session; implied power stays well under the
                // DCFC classification threshold
                gap_h = std::max(rng.uniform(3.5, 6.0), (target - st.soc) * kPackKwh / 15.0);
            }
            st.soc = target;  // the gap jump becomes the inferred charge event
            push_trip(st, st.trips.back().end_time / 3600.0 + gap_h, rng.uniform(0.3, 0.8),
                      std::min(draw * 0.1, std::max(0.0, st.soc - kMinSoc)));
        }

        // evening leg home; a late errand pushes the final ignition-off past
        // the V2G plug-in cutoff
        const double eve_end_h =
            rng.bernoulli(late_prob)
                ? rng.uniform(21.05, 23.8)
                : std::clamp(rng.gaussian(spec.plugin_hour_mean, spec.plugin_hour_sd), 15.5, 20.9);
        const double e_dur = rng.uniform(0.4, 1.1);
        const double prev_end_rel = st.trips.back().end_time / 3600.0 - day_h;
        const double e_start = day_h + std::max(eve_end_h - e_dur, prev_end_rel + 0.3);
        push_trip(st, e_start, e_dur,
                  std::min(std::max(0.0, draw * (1.0 - m_share)), std::max(0.0, st.soc - kMinSoc)));

        // overnight charging: nightly plug-in or threshold-triggered at home,
        // rare opportunistic public Level 2 otherwise
        if (spec.home_access && !fast_stop) {
            const bool urgent = st.soc < kMinSoc + 0.04;
            // symmetric night-to-night threshold noise: the mean SOC before
            // charging and the event rate stay on target while the spread
            // above the V2G floor widens to realistic levels; the cap below
            // the charge target blocks micro top-ups right after a full charge
            const double tonight = std::min(
                night_trigger +
                    (spec.plug_soc_jitter > 0 ? rng.gaussian(0.0, spec.plug_soc_jitter) : 0.0),
                after_mean - 0.15);
            const bool plug = nightly ? !rng.bernoulli(nightly_skip) : st.soc <= tonight;
            if ((urgent || plug) && st.soc < 0.96) st.soc = charge_target(st.soc + 0.02, 0.98);
        } else if (!spec.home_access && rng.bernoulli(spec.overnight_public_prob) &&
                   st.soc < 0.93) {
            st.soc = charge_target(st.soc + 0.02, 0.95);
        }
    }

    if (st.trips.size() < 2)
        throw InvalidInput("generate_driver: spec produced fewer than 2 trips over the window");

    DriverData out;
    out.trips = std::move(st.trips);
    IngestConfig cfg;
    out.implied_events = detect_charging_events(out.trips, cfg).events;
    return out;
}

Fleet generate_fleet(int n, const std::vector<ProfileSpec>& specs, std::uint64_t seed,
                     int months) {
    if (specs.empty()) throw InvalidInput("generate_fleet: no profile specs");
    if (n < int(specs.size()))
        throw InvalidInput("generate_fleet: need at least one driver per profile");
    double share_sum = 0.0;
    for (const auto& s : specs) {
        s.validate();
        share_sum += s.population_share;
    }
    if (std::abs(share_sum - 1.0) > 1e-6)
        throw InvalidInput("generate_fleet: population shares must sum to 1");

    // largest-remainder apportionment with one driver per profile guaranteed
    std::vector<int> counts(specs.size(), 1);
    int assigned = int(specs.size());
    std::vector<std::pair<double, std::size_t>> rem;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const double exact = specs[i].population_share * n;
        const int add = std::max(0, int(std::floor(exact)) - 1);
        counts[i] += add;
        assigned += add;
        rem.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(rem.begin(), rem.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t j = 0; assigned < n; ++j, ++assigned) counts[rem[j % rem.size()].second] += 1;
    while (assigned > n) {  // can happen only when floors already exceed n
        auto mx = std::max_element(counts.begin(), counts.end());
        *mx -= 1;
        --assigned;
    }

    Fleet fleet;
    fleet.specs = specs;
    int serial = 0;
    for (std::size_t p = 0; p < specs.size(); ++p) {
        for (int i = 0; i < counts[p]; ++i, ++serial) {
            GeneratedDriver d;
            char id[16];
            std::snprintf(id, sizeof id, "v%04d", serial);
            d.vehicle_id = id;
            d.profile = int(p);
            d.trips = generate_driver(specs[p], derive_seed(seed, std::uint64_t(serial)), months).trips;
            fleet.drivers.push_back(std::move(d));
        }
    }
    return fleet;
}

void write_trip_log(const Fleet& fleet, std::ostream& out, std::int64_t utc_offset_s) {
    out << "vehicle_id,trip_start,trip_end,soc_start_pct,soc_end_pct,mean_temp_c\n";
    char buf[64];
    for (const auto& d : fleet.drivers) {
        for (const auto& tr : d.trips) {
            out << d.vehicle_id << ',' << format_iso8601(tr.start_time, utc_offset_s) << ','
                << format_iso8601(tr.end_time, utc_offset_s) << ',';
            std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.4f\n", tr.soc_start * 100.0,
                          tr.soc_end * 100.0, tr.mean_temp_k - 273.15);
            out << buf;
        }
    }
}

BehaviorStats behavior_stats(const std::vector<TripRecord>& trips,
                             const std::vector<ChargeEvent>& events) {
    BehaviorStats bs;
    if (trips.empty()) return bs;
    std::set<std::int64_t> days;
    for (const auto& tr : trips)
        for (std::int64_t d = local_day(tr.start_time); d <= local_day(tr.end_time - 1); ++d)
            days.insert(d);
    const double weeks =
        double(trips.back().end_time - trips.front().start_time) / double(kSecondsPerDay * 7);
    bs.driving_days_per_week = weeks > 0 ? double(days.size()) / weeks : 0.0;
    bs.charges_per_week = weeks > 0 ? double(events.size()) / weeks : 0.0;
    if (!events.empty()) {
        int fast = 0;
        double before = 0, after = 0;
        for (const auto& ev : events) {
            fast += ev.kind == ChargeKind::DCFC ? 1 : 0;
            before += ev.soc_start;
            after += ev.soc_target;
        }
        bs.fast_charge_fraction = double(fast) / double(events.size());
        bs.mean_soc_before = before / double(events.size());
        bs.mean_soc_after = after / double(events.size());
    } else {
        bs.mean_soc_before = std::numeric_limits<double>::quiet_NaN();
        bs.mean_soc_after = std::numeric_limits<double>::quiet_NaN();
    }
    return bs;
}

// ---- profile spec files: blocks of `key = value`, new block per `profile =` ---

std::vector<ProfileSpec> load_profile_specs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open profile spec file: " + path);
    std::vector<ProfileSpec> specs;
    std::string line;
    long line_no = 0;
    auto trim = [](std::string v) {
        const auto b = v.find_first_not_of(" \t\r");
        const auto e = v.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "profile") {
            specs.emplace_back();
            specs.back().name = val;
            continue;
        }
        if (specs.empty()) throw ParseError("key before any 'profile =' block", line_no);
        ProfileSpec& s = specs.back();
        try {
            if (key == "population_share") s.population_share = std::stod(val);
            else if (key == "driving_days_per_week") s.driving_days_per_week = std::stod(val);
            else if (key == "charges_per_week") s.charges_per_week = std::stod(val);
            else if (key == "home_access") s.home_access = (val == "yes" || val == "true" || val == "1");
            else if (key == "fast_charge_fraction") s.fast_charge_fraction = std::stod(val);
            else if (key == "mean_soc_before_charge") s.mean_soc_before_charge = std::stod(val);
            else if (key == "mean_soc_after_charge") s.mean_soc_after_charge = std::stod(val);
            else if (key == "trip_energy_sigma") s.trip_energy_sigma = std::stod(val);
            else if (key == "plugin_hour_mean") s.plugin_hour_mean = std::stod(val);
            else if (key == "plugin_hour_sd") s.plugin_hour_sd = std::stod(val);
            else if (key == "late_evening_prob") s.late_evening_prob = std::stod(val);
            else if (key == "overnight_public_prob") s.overnight_public_prob = std::stod(val);
            else if (key == "plug_soc_jitter") s.plug_soc_jitter = std::stod(val);
            else if (key == "temp_lo_k") s.temp_lo_k = std::stod(val);
            else if (key == "temp_hi_k") s.temp_hi_k = std::stod(val);
            else throw ParseError("unknown profile key '" + key + "'", line_no);
        } catch (const std::invalid_argument&) {
            throw ParseError("non-numeric value for '" + key + "'", line_no);
        }
    }
    if (specs.empty()) throw InvalidInput("profile spec file has no profiles: " + path);
    for (const auto& s : specs) s.validate();
    return specs;
}

void save_profile_specs(const std::vector<ProfileSpec>& specs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write profile spec file: " + path);
    out << "# fleet behavior profiles; shares/frequencies/SOC means follow the\n"
           "# published fleet statistics, dispersion and timing knobs are\n"
           "# generator choices\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return std::string(buf);
    };
    for (const auto& s : specs) {
        out << "\nprofile = " << s.name << "\n";
        out << "population_share = " << num(s.population_share) << "\n";
        out << "driving_days_per_week = " << num(s.driving_days_per_week) << "\n";
        out << "charges_per_week = " << num(s.charges_per_week) << "\n";
        out << "home_access = " << (s.home_access ? "yes" : "no") << "\n";
        out << "fast_charge_fraction = " << num(s.fast_charge_fraction) << "\n";
        out << "mean_soc_before_charge = " << num(s.mean_soc_before_charge) << "\n";
        out << "mean_soc_after_charge = " << num(s.mean_soc_after_charge) << "\n";
        out << "trip_energy_sigma = " << num(s.trip_energy_sigma) << "\n";
        out << "plugin_hour_mean = " << num(s.plugin_hour_mean) << "\n";
        out << "plugin_hour_sd = " << num(s.plugin_hour_sd) << "\n";
        out << "late_evening_prob = " << num(s.late_evening_prob) << "\n";
        out << "overnight_public_prob = " << num(s.overnight_public_prob) << "\n";
        out << "plug_soc_jitter = " << num(s.plug_soc_jitter) << "\n";
        out << "temp_lo_k = " << num(s.temp_lo_k) << "\n";
        out << "temp_hi_k = " << num(s.temp_hi_k) << "\n";
    }
}

}  // namespace v2g
