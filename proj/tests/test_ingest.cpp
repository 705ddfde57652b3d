#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "v2g/degradation.hpp"
#include "v2g/ingest.hpp"
#include "v2g/scheduler.hpp"

using namespace v2g;

namespace {

constexpr std::int64_t kOffset = -8 * 3600;

TripRecord trip(std::int64_t start, std::int64_t end, double s0, double s1, double temp = 295.0) {
    return {start, end, s0, s1, temp};
}

}  // namespace

TEST_CASE("iso8601 parse and format round-trip") {
    const std::string ts = "2023-01-15T18:30:00-08:00";
    const auto t = parse_iso8601(ts, kOffset);
    CHECK(format_iso8601(t, kOffset) == ts);
    CHECK(local_time_of_day(t) == 18 * 3600 + 30 * 60);

    // a +01:00 timestamp shifted onto the -08:00 run clock
    const auto t2 = parse_iso8601("2023-01-16T03:30:00+01:00", kOffset);
    CHECK(t2 == t);

    const auto tz = parse_iso8601("2023-01-16T02:30:00Z", kOffset);
    CHECK(tz == t);

    CHECK_THROWS_AS((void)parse_iso8601("yesterday", kOffset), ParseError);
}

TEST_CASE("parse_trip_log: single row converts percent and celsius") {
    std::istringstream in(
        "vehicle_id,trip_start,trip_end,soc_start_pct,soc_end_pct,mean_temp_c\n"
        "car1,2023-01-02T08:00:00-08:00,2023-01-02T09:00:00-08:00,40.0,30.0,21.5\n");
    const auto m = parse_trip_log(in, kOffset);
    REQUIRE(m.size() == 1);
    const auto& tr = m.at("car1").front();
    CHECK(tr.soc_start == doctest::Approx(0.40));
    CHECK(tr.soc_end == doctest::Approx(0.30));
    CHECK(tr.mean_temp_k == doctest::Approx(294.65));
    CHECK(tr.end_time - tr.start_time == 3600);
}

TEST_CASE("parse_trip_log: empty file with header gives empty map") {
    std::istringstream in("vehicle_id,trip_start,trip_end,soc_start_pct,soc_end_pct,mean_temp_c\n");
    CHECK(parse_trip_log(in, kOffset).empty());
}

TEST_CASE("parse_trip_log error paths carry line numbers") {
    std::istringstream bad_end(
        "vehicle_id,trip_start,trip_end,soc_start_pct,soc_end_pct,mean_temp_c\n"
        "car1,2023-01-02T09:00:00-08:00,2023-01-02T08:00:00-08:00,40.0,30.0,21.5\n");
    try {
        (void)parse_trip_log(bad_end, kOffset);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line_number == 2);
    }

    std::istringstream overlap(
        "vehicle_id,trip_start,trip_end,soc_start_pct,soc_end_pct,mean_temp_c\n"
        "c,2023-01-02T08:00:00-08:00,2023-01-02T10:00:00-08:00,80,70,20\n"
        "c,2023-01-02T09:30:00-08:00,2023-01-02T11:00:00-08:00,70,60,20\n");
    CHECK_THROWS_AS((void)parse_trip_log(overlap, kOffset), InvalidInput);

    std::istringstream rising(
        "vehicle_id,trip_start,trip_end,soc_start_pct,soc_end_pct,mean_temp_c\n"
        "c,2023-01-02T08:00:00-08:00,2023-01-02T09:00:00-08:00,40,55,20\n");
    CHECK_THROWS_AS((void)parse_trip_log(rising, kOffset), ParseError);

    std::istringstream garbled(
        "vehicle_id,trip_start,trip_end,soc_start_pct,soc_end_pct,mean_temp_c\n"
        "c,2023-01-02T08:00:00-08:00,2023-01-02T09:00:00-08:00,forty,30,20\n");
    try {
        (void)parse_trip_log(garbled, kOffset);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line_number == 2);
    }
}

TEST_CASE("detect: 4h gap, 40->80% on 71.4 kWh is a 9.6 kW AC event") {
    IngestConfig cfg;
    std::vector<TripRecord> trips = {trip(0, 3600, 0.5, 0.4),
                                     trip(3600 + 4 * 3600, 3600 + 5 * 3600, 0.8, 0.7)};
    const auto res = detect_charging_events(trips, cfg);
    REQUIRE(res.events.size() == 1);
    const auto& ev = res.events[0];
    CHECK(ev.kind == ChargeKind::AC_L2);
    CHECK(ev.sim_power_kw == doctest::Approx(9.6));  // avg 7.14 kW < 9.6 floor
    CHECK(ev.soc_start == doctest::Approx(0.4));
    CHECK(ev.soc_target == doctest::Approx(0.8));
    // charge duration at the simulated power: 28.56 kWh / 9.6 kW
    const auto plan = immediate_plan(ev, cfg);
    CHECK(plan.segments.front().end - plan.segments.front().start ==
          std::int64_t(2.975 * 3600));
}

TEST_CASE("detect: 1h gap, 10->80% is a 100 kW DCFC event") {
    IngestConfig cfg;
    std::vector<TripRecord> trips = {trip(0, 3600, 0.2, 0.1), trip(2 * 3600, 3 * 3600, 0.8, 0.7)};
    const auto res = detect_charging_events(trips, cfg);
    REQUIRE(res.events.size() == 1);
    CHECK(res.events[0].kind == ChargeKind::DCFC);
    CHECK(res.events[0].sim_power_kw == doctest::Approx(100.0));
}

TEST_CASE("detect: no SOC increase means no event; over-limit gaps are excluded") {
    IngestConfig cfg;
    std::vector<TripRecord> flat = {trip(0, 3600, 0.5, 0.4), trip(7200, 9000, 0.4, 0.3)};
    CHECK(detect_charging_events(flat, cfg).events.empty());

    // 0 -> 95% in 30 minutes needs ~135 kW: infeasible, warned, excluded
    std::vector<TripRecord> impossible = {trip(0, 3600, 0.2, 0.0),
                                          trip(3600 + 1800, 3600 + 3600, 0.95, 0.9)};
    const auto res = detect_charging_events(impossible, cfg);
    CHECK(res.events.empty());
    CHECK(res.warnings.size() == 1);
}

TEST_CASE("detect: inferred AC power above the 9.6 kW floor is kept") {
    IngestConfig cfg;
    // 40% in 2h on 71.4 kWh = 14.28 kW, between 9.6 and 19.2
    std::vector<TripRecord> trips = {trip(0, 3600, 0.5, 0.4), trip(3600 + 7200, 3600 + 10800, 0.8, 0.7)};
    const auto res = detect_charging_events(trips, cfg);
    REQUIRE(res.events.size() == 1);
    CHECK(res.events[0].kind == ChargeKind::AC_L2);
    CHECK(res.events[0].sim_power_kw == doctest::Approx(14.28).epsilon(1e-6));
}

TEST_CASE("build_timeline: single trip gives the implied constant rate") {
    IngestConfig cfg;
    std::vector<TripRecord> trips = {trip(0, 3600, 0.8, 0.7)};
    const auto tl = build_timeline("veh", trips, {}, {}, cfg);
    CHECK(validate_timeline(tl).empty());
    CHECK(tl.samples.front().c_rate == doctest::Approx(-0.1));
    CHECK(tl.samples.back().soc == doctest::Approx(0.7));
    CHECK(tl.samples.size() == 61);  // 60 s grid over one hour plus the endpoint
}

TEST_CASE("build_timeline: immediate-charge plan charges then rests") {
    IngestConfig cfg;
    std::vector<TripRecord> trips = {trip(0, 3600, 0.5, 0.4),
                                     trip(3600 + 4 * 3600, 3600 + 5 * 3600, 0.8, 0.7)};
    const auto det = detect_charging_events(trips, cfg);
    std::vector<EventPlan> plans = {immediate_plan(det.events[0], cfg)};
    const auto tl = build_timeline("veh", trips, det.events, plans, cfg);
    CHECK(validate_timeline(tl).empty());
    // the charging rate right after plug-in: 9.6/71.4 per hour
    bool found = false;
    for (const auto& s : tl.samples)
        if (s.t == 3600) {
            CHECK(s.c_rate == doctest::Approx(9.6 / 71.4).epsilon(1e-9));
            found = true;
        }
    CHECK(found);
    // rest at the target before the next trip
    for (const auto& s : tl.samples)
        if (s.t > 3600 + std::int64_t(2.975 * 3600) && s.t < 3600 + 4 * 3600)
            CHECK(s.soc == doctest::Approx(0.8));
}

TEST_CASE("build_timeline rejects plans that leave the SOC range") {
    IngestConfig cfg;
    std::vector<TripRecord> trips = {trip(0, 3600, 0.5, 0.4),
                                     trip(3600 + 7200, 3600 + 9000, 0.8, 0.7)};
    ChargeEvent ev;
    ev.plugin_time = 3600;
    ev.depart_time = 3600 + 7200;
    ev.soc_start = 0.4;
    ev.soc_target = 0.8;
    ev.kind = ChargeKind::AC_L2;
    ev.sim_power_kw = 9.6;
    EventPlan plan;
    plan.segments.push_back({3600, 3600 + 7200, 0.4, 1.02});  // overshoots full
    CHECK_THROWS_AS((void)build_timeline("veh", trips, {ev}, {plan}, cfg), InfeasiblePlan);
}

TEST_CASE("build_timeline: unexplained SOC drop becomes a zero-throughput seam") {
    IngestConfig cfg;
    std::vector<TripRecord> trips = {trip(0, 3600, 0.5, 0.4), trip(7200, 9000, 0.35, 0.3)};
    const auto tl = build_timeline("veh", trips, {}, {}, cfg);
    CHECK(validate_timeline(tl).empty());
    REQUIRE(tl.seam_marks.size() == 1);
    const auto i = tl.seam_marks[0];
    CHECK(tl.samples[i].c_rate == 0.0);
    CHECK(tl.samples[i + 1].soc == doctest::Approx(0.35));
}

TEST_CASE("extend_cyclic: 4-month base tiles 15 years with 44 seams") {
    IngestConfig cfg;
    // 122-day base window (one four-month observation block), SOC-neutral
    // trips so the base carries no seams of its own
    std::vector<TripRecord> trips;
    for (int d = 0; d <= 122; ++d)
        trips.push_back(trip(std::int64_t(d) * kSecondsPerDay + 8 * 3600,
                             std::int64_t(d) * kSecondsPerDay + 9 * 3600, 0.8, 0.8));
    const auto base = build_timeline("veh", trips, {}, {}, cfg);
    const auto ext = extend_cyclic(base, 15.0);
    CHECK(validate_timeline(ext).empty());

    const std::int64_t span = base.span_seconds();
    const auto tiles = std::int64_t(std::ceil(15.0 * 365.0 * 86400.0 / double(span)));
    CHECK(tiles == 45);
    CHECK(ext.seam_marks.size() == 44);
    CHECK(ext.samples.size() == 45 * base.samples.size());
    CHECK(ext.span_seconds() >= std::int64_t(15.0 * 365.0 * 86400.0));
}

TEST_CASE("extend_cyclic: seams carry no SOC jump when the base closes on itself") {
    IngestConfig cfg;
    std::vector<TripRecord> trips;
    // drive down then recover through charging so end SOC equals start SOC
    trips.push_back(trip(0, 3600, 0.8, 0.7));
    trips.push_back(trip(2 * kSecondsPerDay, 2 * kSecondsPerDay + 3600, 0.8, 0.8 - 1e-12));
    const auto det = detect_charging_events(trips, cfg);
    REQUIRE(det.events.size() == 1);
    std::vector<EventPlan> plans = {immediate_plan(det.events[0], cfg)};
    const auto base = build_timeline("veh", trips, det.events, plans, cfg);
    const auto ext = extend_cyclic(base, 0.1);
    for (std::size_t m : ext.seam_marks)
        CHECK(std::abs(ext.samples[m + 1].soc - ext.samples[m].soc) < 1e-9);
}

TEST_CASE("extend_cyclic: EFC scales exactly with the tile count") {
    IngestConfig cfg;
    std::vector<TripRecord> trips;
    for (int d = 0; d < 10; ++d) {
        trips.push_back(trip(std::int64_t(d) * kSecondsPerDay + 8 * 3600,
                             std::int64_t(d) * kSecondsPerDay + 10 * 3600, 0.8, 0.5));
        trips.push_back(trip(std::int64_t(d) * kSecondsPerDay + 12 * 3600,
                             std::int64_t(d) * kSecondsPerDay + 13 * 3600, 0.8, 0.75));
    }
    const auto det = detect_charging_events(trips, cfg);
    std::vector<EventPlan> plans;
    for (const auto& ev : det.events) plans.push_back(immediate_plan(ev, cfg));
    const auto base = build_timeline("veh", trips, det.events, plans, cfg);
    const auto ext = extend_cyclic(base, 1.0);
    const auto tiles = std::int64_t(std::ceil(365.0 * 86400.0 / double(base.span_seconds())));

    BatteryParams p;
    p.design_name = "efc-test";
    p.p1 = 0;
    p.p4 = 1;
    p.p5 = 1;
    p.p10 = 1;
    const auto r_base = simulate(p, base);
    const auto r_ext = simulate(p, ext);
    CHECK(r_ext.efc_total ==
          doctest::Approx(double(tiles) * r_base.efc_total).epsilon(1e-9));

    CHECK_THROWS_AS((void)extend_cyclic(base, 0.0), InvalidInput);

    // bases shorter than a day cannot be tiled
    UsageTimeline stub;
    stub.samples = {{0, 0.5, 0.0, 295.0}, {3600, 0.5, 0.0, 295.0}};
    CHECK_THROWS_AS((void)extend_cyclic(stub, 1.0), InvalidInput);
}

TEST_CASE("energy balance per planned charge segment") {
    IngestConfig cfg;
    std::vector<TripRecord> trips = {trip(0, 3600, 0.5, 0.37),
                                     trip(3600 + 5 * 3600, 3600 + 6 * 3600, 0.83, 0.7)};
    const auto det = detect_charging_events(trips, cfg);
    REQUIRE(det.events.size() == 1);
    const auto plan = immediate_plan(det.events[0], cfg);
    for (const auto& seg : plan.segments) {
        if (seg.soc_end == seg.soc_start) continue;
        const double effective_kw =
            seg.c_rate_per_h() * cfg.pack_capacity_kwh;
        const double energy = (seg.soc_end - seg.soc_start) * cfg.pack_capacity_kwh;
        const double dur_h = double(seg.end - seg.start) / 3600.0;
        CHECK(std::abs(energy - effective_kw * dur_h) < 1e-6);
        // the effective power stays within half a second's trim of nominal
        CHECK(effective_kw ==
              doctest::Approx(det.events[0].sim_power_kw).epsilon(1e-4));
    }
}

TEST_CASE("detect is insensitive to vehicle interleaving in the log") {
    std::ostringstream log;
    log << "vehicle_id,trip_start,trip_end,soc_start_pct,soc_end_pct,mean_temp_c\n";
    // interleave rows of two vehicles out of per-vehicle order
    log << "b,2023-01-02T08:00:00-08:00,2023-01-02T09:00:00-08:00,90,80,20\n";
    log << "a,2023-01-02T08:00:00-08:00,2023-01-02T09:00:00-08:00,50,40,20\n";
    log << "b,2023-01-02T18:00:00-08:00,2023-01-02T19:00:00-08:00,85,75,20\n";
    log << "a,2023-01-02T18:00:00-08:00,2023-01-02T19:00:00-08:00,80,70,20\n";
    std::istringstream in1(log.str());
    const auto m = parse_trip_log(in1, kOffset);
    IngestConfig cfg;
    const auto ra = detect_charging_events(m.at("a"), cfg);
    const auto rb = detect_charging_events(m.at("b"), cfg);
    CHECK(ra.events.size() == 1);  // 40 -> 80 midday gap
    CHECK(rb.events.size() == 1);  // 80 -> 85 midday gap
    CHECK(ra.events[0].soc_target == doctest::Approx(0.8));
    // re-running detection gives the same events (idempotence)
    const auto ra2 = detect_charging_events(m.at("a"), cfg);
    CHECK(ra2.events.size() == ra.events.size());
    CHECK(ra2.events[0].plugin_time == ra.events[0].plugin_time);
}

TEST_CASE("timeline csv round trip") {
    IngestConfig cfg;
    std::vector<TripRecord> trips = {trip(0, 3600, 0.8, 0.7)};
    const auto tl = build_timeline("veh", trips, {}, {}, cfg);
    std::ostringstream out;
    write_timeline_csv(tl, out);
    std::istringstream in(out.str());
    const auto rt = read_timeline_csv("veh", in);
    REQUIRE(rt.samples.size() == tl.samples.size());
    CHECK(rt.samples.back().soc == doctest::Approx(tl.samples.back().soc));
}
