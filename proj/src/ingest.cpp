#include "v2g/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace v2g {

void IngestConfig::validate() const {
    if (!(pack_capacity_kwh > 0)) throw InvalidInput("ingest: pack_capacity_kwh must be > 0");
    if (!(dcfc_sim_power_kw > dcfc_threshold_kw && dcfc_threshold_kw > ac_sim_power_kw &&
          ac_sim_power_kw > 0))
        throw InvalidInput("ingest: need dcfc_sim_power > dcfc_threshold > ac_sim_power > 0");
    if (timeline_step_s <= 0) throw InvalidInput("ingest: timeline_step_s must be > 0");
}

// ---- calendar arithmetic (proleptic Gregorian, Howard Hinnant's algorithm) --

static std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097LL + static_cast<int>(doe) - 719468;
}

static void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yr + (m <= 2));
}

std::int64_t parse_iso8601(const std::string& text, std::int64_t utc_offset_s, long line) {
    int y, mo, d, h, mi, s;
    char sign = 0;
    int oh = 0, om = 0;
    if (std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d%c%d:%d", &y, &mo, &d, &h, &mi, &s, &sign,
                    &oh, &om) >= 7) {
        std::int64_t utc = days_from_civil(y, mo, d) * kSecondsPerDay + h * 3600 + mi * 60 + s;
        if (sign == '+') utc -= oh * 3600 + om * 60;
        else if (sign == '-') utc += oh * 3600 + om * 60;
        else if (sign != 'Z')
            throw ParseError("bad timezone suffix in timestamp '" + text + "'", line);
        return utc + utc_offset_s;
    }
    throw ParseError("malformed ISO-8601 timestamp '" + text + "'", line);
}

std::string format_iso8601(std::int64_t local_s, std::int64_t utc_offset_s) {
    const std::int64_t utc = local_s - utc_offset_s;
    // render in the run offset so the wall-clock fields match the local time
    const std::int64_t shifted = utc + utc_offset_s;
    std::int64_t days = shifted >= 0 ? shifted / kSecondsPerDay
                                     : (shifted - (kSecondsPerDay - 1)) / kSecondsPerDay;
    int tod = static_cast<int>(shifted - days * kSecondsPerDay);
    int y, mo, d;
    civil_from_days(days, y, mo, d);
    const std::int64_t off = utc_offset_s;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d%c%02d:%02d", y, mo, d,
                  tod / 3600, (tod % 3600) / 60, tod % 60, off < 0 ? '-' : '+',
                  int(std::llabs(off)) / 3600, (int(std::llabs(off)) % 3600) / 60);
    return buf;
}

// ---- trip-log parsing -------------------------------------------------------

static std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::map<std::string, std::vector<TripRecord>> parse_trip_log(std::istream& in,
                                                              std::int64_t utc_offset_s) {
    std::string line;
    long line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty trip log", 0);
    ++line_no;
    static const std::string kHeader =
        "vehicle_id,trip_start,trip_end,soc_start_pct,soc_end_pct,mean_temp_c";
    if (line != kHeader && line != kHeader + "\r")
        throw ParseError("unexpected trip-log header '" + line + "'", line_no);

    std::map<std::string, std::vector<TripRecord>> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv(line);
        if (f.size() != 6) throw ParseError("expected 6 fields, got " + std::to_string(f.size()), line_no);
        TripRecord tr;
        tr.start_time = parse_iso8601(f[1], utc_offset_s, line_no);
        tr.end_time = parse_iso8601(f[2], utc_offset_s, line_no);
        double soc_start_pct, soc_end_pct, temp_c;
        try {
            soc_start_pct = std::stod(f[3]);
            soc_end_pct = std::stod(f[4]);
            temp_c = std::stod(f[5]);
        } catch (const std::exception&) {
            throw ParseError("non-numeric field in row", line_no);
        }
        tr.soc_start = soc_start_pct / 100.0;
        tr.soc_end = soc_end_pct / 100.0;
        tr.mean_temp_k = temp_c + 273.15;
        if (tr.end_time <= tr.start_time) throw ParseError("trip_end <= trip_start", line_no);
        if (tr.soc_start < 0 || tr.soc_start > 1 || tr.soc_end < 0 || tr.soc_end > 1)
            throw ParseError("SOC percent outside [0,100]", line_no);
        if (tr.soc_end > tr.soc_start)
            throw ParseError("SOC rises within a trip (mid-trip charging is not representable)",
                             line_no);
        out[f[0]].push_back(tr);
    }
    for (auto& [vid, trips] : out) {
        std::stable_sort(trips.begin(), trips.end(),
                         [](const TripRecord& a, const TripRecord& b) { return a.start_time < b.start_time; });
        for (std::size_t i = 0; i + 1 < trips.size(); ++i)
            if (trips[i + 1].start_time < trips[i].end_time)
                throw InvalidInput("vehicle " + vid + ": trips " + std::to_string(i) + " and " +
                                   std::to_string(i + 1) + " overlap");
    }
    return out;
}

std::map<std::string, std::vector<TripRecord>> parse_trip_log_file(const std::string& path,
                                                                   std::int64_t utc_offset_s) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open trip log: " + path);
    return parse_trip_log(in, utc_offset_s);
}

// ---- charging-event inference ----------------------------------------------

DetectResult detect_charging_events(const std::vector<TripRecord>& trips,
                                    const IngestConfig& cfg) {
    cfg.validate();
    DetectResult res;
    for (std::size_t i = 0; i + 1 < trips.size(); ++i) {
        const auto& prev = trips[i];
        const auto& next = trips[i + 1];
        const std::int64_t gap_s = next.start_time - prev.end_time;
        if (gap_s <= 0) throw InvalidInput("detect_charging_events: trips not strictly ordered");
        const double dsoc = next.soc_start - prev.soc_end;
        if (dsoc <= 0.0) continue;  // no measurable SOC increase, no event
        const double gap_h = double(gap_s) / kSecondsPerHour;
        const double avg_kw = dsoc * cfg.pack_capacity_kwh / gap_h;
        ChargeEvent ev;
        ev.plugin_time = prev.end_time;
        ev.depart_time = next.start_time;
        ev.soc_start = prev.soc_end;
        ev.soc_target = next.soc_start;
        if (avg_kw > cfg.dcfc_sim_power_kw) {
            res.warnings.push_back("gap after t=" + std::to_string(prev.end_time) +
                                   " needs " + std::to_string(avg_kw) +
                                   " kW (> DCFC sim power); event excluded as infeasible");
            continue;
        }
        if (avg_kw > cfg.dcfc_threshold_kw) {
            ev.kind = ChargeKind::DCFC;
            ev.sim_power_kw = cfg.dcfc_sim_power_kw;
        } else {
            ev.kind = ChargeKind::AC_L2;
            // an inferred average in (ac_sim, threshold] cannot reach the target
            // within the gap at the nominal AC power; keep the observed average
            ev.sim_power_kw = std::max(cfg.ac_sim_power_kw, avg_kw);
        }
        res.events.push_back(ev);
    }
    return res;
}

// ---- plans and timeline synthesis --------------------------------------------

EventPlan immediate_plan(const ChargeEvent& ev, const IngestConfig& cfg) {
    const double need_kwh = (ev.soc_target - ev.soc_start) * cfg.pack_capacity_kwh;
    if (need_kwh <= 0) throw InvalidInput("immediate_plan: event with no SOC increase");
    std::int64_t dur =
        round_to_second(need_kwh / ev.sim_power_kw * kSecondsPerHour);
    const std::int64_t gap = ev.depart_time - ev.plugin_time;
    dur = std::clamp<std::int64_t>(dur, 1, gap);
    EventPlan plan;
    plan.segments.push_back({ev.plugin_time, ev.plugin_time + dur, ev.soc_start, ev.soc_target});
    if (ev.plugin_time + dur < ev.depart_time)
        plan.segments.push_back(
            {ev.plugin_time + dur, ev.depart_time, ev.soc_target, ev.soc_target});
    return plan;
}

namespace {

struct Piece {
    std::int64_t start, end;
    double soc_start, soc_end;
    double temp_k;
    bool seam = false;
    bool sample_interior;  // trips and charge/discharge get step-grid samples
};

}  // namespace

UsageTimeline build_timeline(const std::string& vehicle_id,
                             const std::vector<TripRecord>& trips,
                             const std::vector<ChargeEvent>& events,
                             const std::vector<EventPlan>& plans, const IngestConfig& cfg) {
    cfg.validate();
    if (trips.empty()) throw InvalidInput("build_timeline: vehicle " + vehicle_id + " has no trips");
    if (events.size() != plans.size())
        throw InvalidInput("build_timeline: events/plans size mismatch");

    // index events by their gap (plugin time == preceding trip end)
    std::map<std::int64_t, std::size_t> event_at;
    for (std::size_t e = 0; e < events.size(); ++e) event_at[events[e].plugin_time] = e;

    std::vector<Piece> pieces;
    double soc = trips.front().soc_start;
    for (std::size_t i = 0; i < trips.size(); ++i) {
        const auto& tr = trips[i];
        pieces.push_back({tr.start_time, tr.end_time, tr.soc_start, tr.soc_end, tr.mean_temp_k,
                          false, true});
        soc = tr.soc_end;
        if (i + 1 == trips.size()) break;
        const auto& next = trips[i + 1];
        const std::int64_t gap_start = tr.end_time, gap_end = next.start_time;
        if (gap_end == gap_start) {
            if (std::abs(next.soc_start - soc) > 1e-12)
                throw InvalidInput("build_timeline: SOC discontinuity in zero-length gap");
            continue;
        }
        const auto it = event_at.find(gap_start);
        if (it != event_at.end()) {
            const auto& ev = events[it->second];
            const auto& plan = plans[it->second];
            if (ev.depart_time != gap_end)
                throw InvalidInput("build_timeline: event does not span its gap");
            std::int64_t cursor = gap_start;
            double cur_soc = soc;
            for (const auto& seg : plan.segments) {
                if (seg.start != cursor)
                    throw InvalidInput("build_timeline: plan segments do not tile the gap");
                if (seg.soc_start < -1e-12 || seg.soc_end > 1.0 + 1e-12 || seg.soc_start > 1.0 + 1e-12 ||
                    seg.soc_end < -1e-12)
                    throw InfeasiblePlan("plan for event at t=" + std::to_string(ev.plugin_time) +
                                         " drives SOC outside [0,1]");
                if (std::abs(seg.soc_start - cur_soc) > 1e-9)
                    throw InvalidInput("build_timeline: plan SOC discontinuity");
                const bool active = std::abs(seg.soc_end - seg.soc_start) > 0;
                pieces.push_back(
                    {seg.start, seg.end, seg.soc_start, seg.soc_end, tr.mean_temp_k, false, active});
                cursor = seg.end;
                cur_soc = seg.soc_end;
            }
            if (cursor != gap_end)
                throw InvalidInput("build_timeline: plan segments do not reach departure");
            soc = cur_soc;
            if (std::abs(soc - next.soc_start) > 1e-9)
                throw InvalidInput("build_timeline: plan ends at SOC " + std::to_string(soc) +
                                   " but next trip starts at " + std::to_string(next.soc_start));
        } else if (std::abs(next.soc_start - soc) <= 1e-12) {
            pieces.push_back({gap_start, gap_end, soc, soc, tr.mean_temp_k, false, false});
        } else {
            // telemetry discrepancy with no inferred event: rest, then a
            // one-second zero-throughput seam jump onto the next trip's SOC
            if (gap_end - gap_start < 2)
                throw InvalidInput("build_timeline: SOC discontinuity in sub-2s gap");
            pieces.push_back({gap_start, gap_end - 1, soc, soc, tr.mean_temp_k, false, false});
            pieces.push_back({gap_end - 1, gap_end, soc, next.soc_start, tr.mean_temp_k, true, false});
            soc = next.soc_start;
        }
    }

    // each piece emits its start (with the piece's rate) and any interior
    // samples; the shared boundary sample belongs to the following piece
    UsageTimeline tl;
    tl.vehicle_id = vehicle_id;
    for (const auto& pc : pieces) {
        const std::int64_t dur = pc.end - pc.start;
        if (dur <= 0) continue;
        const double rate =
            pc.seam ? 0.0 : (pc.soc_end - pc.soc_start) / (double(dur) / kSecondsPerHour);
        tl.samples.push_back({pc.start, pc.soc_start, rate, pc.temp_k});
        if (pc.seam) tl.seam_marks.push_back(tl.samples.size() - 1);
        if (pc.sample_interior && dur > cfg.timeline_step_s) {
            for (std::int64_t t = pc.start + cfg.timeline_step_s; t < pc.end;
                 t += cfg.timeline_step_s)
                tl.samples.push_back(
                    {t, pc.soc_start + rate * (double(t - pc.start) / kSecondsPerHour), rate,
                     pc.temp_k});
        }
    }
    const auto& last = pieces.back();
    tl.samples.push_back({last.end, last.soc_end, 0.0, last.temp_k});
    return tl;
}

UsageTimeline extend_cyclic(const UsageTimeline& base, double horizon_years) {
    if (horizon_years <= 0) throw InvalidInput("extend_cyclic: non-positive horizon");
    if (base.samples.size() < 2) throw InvalidInput("extend_cyclic: base timeline too short");
    const std::int64_t span = base.span_seconds();
    if (span < kSecondsPerDay) throw InvalidInput("extend_cyclic: base span must be >= 1 day");
    const double horizon_s = horizon_years * kDaysPerYear * double(kSecondsPerDay);
    const auto tiles = static_cast<std::int64_t>(std::ceil(horizon_s / double(span)));

    UsageTimeline out;
    out.vehicle_id = base.vehicle_id;
    out.samples.reserve(static_cast<std::size_t>(tiles) * base.samples.size());
    for (std::int64_t k = 0; k < tiles; ++k) {
        const std::int64_t shift = k * (span + 1);  // one-second seam interval per boundary
        const std::size_t tile_first = out.samples.size();
        for (const auto& s : base.samples)
            out.samples.push_back({s.t + shift, s.soc, s.c_rate, s.temp_k});
        for (std::size_t m : base.seam_marks) out.seam_marks.push_back(tile_first + m);
        if (k + 1 < tiles) {
            // the tile's final sample opens the seam interval to the next tile
            out.samples.back().c_rate = 0.0;
            out.seam_marks.push_back(out.samples.size() - 1);
        }
    }
    return out;
}

// ---- timeline text export ----------------------------------------------------

void write_timeline_csv(const UsageTimeline& tl, std::ostream& out) {
    out << "t_s,soc,c_rate_per_h,temp_k\n";
    char buf[160];
    for (const auto& s : tl.samples) {
        std::snprintf(buf, sizeof buf, "%lld,%.12g,%.12g,%.12g\n",
                      static_cast<long long>(s.t), s.soc, s.c_rate, s.temp_k);
        out << buf;
    }
}

UsageTimeline read_timeline_csv(const std::string& vehicle_id, std::istream& in) {
    UsageTimeline tl;
    tl.vehicle_id = vehicle_id;
    std::string line;
    long line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty timeline file", 0);
    ++line_no;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        TimelineSample s;
        long long t;
        if (std::sscanf(line.c_str(), "%lld,%lf,%lf,%lf", &t, &s.soc, &s.c_rate, &s.temp_k) != 4)
            throw ParseError("malformed timeline row", line_no);
        s.t = t;
        tl.samples.push_back(s);
    }
    return tl;
}

}  // namespace v2g
