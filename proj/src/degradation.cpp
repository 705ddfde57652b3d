#include "v2g/degradation.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace v2g {

void BatteryParams::validate() const {
    if (!(p4 > 0.0)) throw InvalidInput("battery params '" + design_name + "': p4 must be > 0");
    if (!(p10 > 0.0)) throw InvalidInput("battery params '" + design_name + "': p10 must be > 0");
    if (!(q0 > 0.0)) throw InvalidInput("battery params '" + design_name + "': q0 must be > 0");
}

double anode_potential(double soc) {
    if (soc < 0.0 || soc > 1.0)
        throw InvalidInput("anode_potential: soc " + std::to_string(soc) + " outside [0,1]");
    const double x = 0.0085 + 0.7715 * soc;
    return 0.6379 + 0.5416 * std::exp(-305.53 * x)
         + 0.0440 * std::tanh((-x - 0.1958) / 0.1088)
         - 0.1978 * std::tanh((x - 1.0571) / 0.0854)
         - 0.6875 * std::tanh((x + 0.0117) / 0.0529)
         - 0.0175 * std::tanh((x - 0.5692) / 0.0875);
}

ScenarioAverages scenario_averages(const UsageTimeline& tl) {
    const auto& s = tl.samples;
    ScenarioAverages a;
    a.t_avg_k = detail::time_weighted_mean_impl(
        s.size(), [&](std::size_t i) { return double(s[i].t); },
        [&](std::size_t i) { return s[i].temp_k; });
    a.soc_avg = detail::time_weighted_mean_impl(
        s.size(), [&](std::size_t i) { return double(s[i].t); },
        [&](std::size_t i) { return s[i].soc; });
    return a;
}

static double fit_time(const BatteryParams& p, double t_seconds) {
    const double days = t_seconds / double(kSecondsPerDay);
    return p.time_unit == FitTimeUnit::Days ? days : days / kDaysPerYear;
}

double calendar_loss(const BatteryParams& p, double t_seconds, double t_avg_k, double soc_avg) {
    if (t_seconds < 0.0) throw InvalidInput("calendar_loss: negative time");
    if (t_seconds == 0.0) return 0.0;
    const double ua = anode_potential(soc_avg);
    return p.p1 * std::exp(p.p2 / t_avg_k) * std::exp(p.p3 * ua / t_avg_k)
         * std::pow(fit_time(p, t_seconds), p.p4);
}

static double cycle_prefactor(const BatteryParams& p, double soc, double abs_c, double t_avg_k) {
    return (p.p5 + p.p6 * (1.0 - soc) + p.p7 * abs_c)
         * (std::exp(p.p8 / t_avg_k) + std::exp(-p.p9 / t_avg_k));
}

DegradationState cycle_step(const BatteryParams& p, const DegradationState& s, double soc,
                            double c_rate, double t_avg_k, double defc) {
    if (defc < 0.0) throw InvalidInput("cycle_step: negative defc");
    DegradationState out = s;
    if (defc == 0.0) return out;
    const double k = cycle_prefactor(p, soc, std::abs(c_rate), t_avg_k);
    out.q_loss_cyc += k * (std::pow(s.efc + defc, p.p10) - std::pow(s.efc, p.p10));
    out.efc += defc;
    return out;
}

const Checkpoint& ScenarioResult::at_seconds(double t_s) const {
    for (const auto& c : checkpoints)
        if (std::abs(c.t_s - t_s) < 0.5) return c;
    throw InvalidInput("no checkpoint at t = " + std::to_string(t_s) + " s");
}

const Checkpoint& ScenarioResult::at_years(double years) const {
    return at_seconds(years * kDaysPerYear * kSecondsPerDay);
}

ScenarioResult simulate(const BatteryParams& p, const UsageTimeline& tl, const SimOptions& opt) {
    p.validate();
    if (auto viol = validate_timeline(tl); !viol.empty())
        throw InvalidInput("simulate: invalid timeline for '" + tl.vehicle_id + "': first violation at index "
                           + std::to_string(viol.front().index) + " (" + viol.front().rule + ")");

    const auto avg = scenario_averages(tl);
    const double efc_scale = opt.efc_halving ? 0.5 : 1.0;
    const double t_term = std::exp(p.p8 / avg.t_avg_k) + std::exp(-p.p9 / avg.t_avg_k);
    const double cal_coeff =
        p.p1 * std::exp(p.p2 / avg.t_avg_k) * std::exp(p.p3 * anode_potential(avg.soc_avg) / avg.t_avg_k);

    ScenarioResult res;
    res.vehicle_id = tl.vehicle_id;
    res.design_name = p.design_name;
    res.q0 = p.q0;
    res.t_avg_k = avg.t_avg_k;
    res.soc_avg = avg.soc_avg;

    const auto& s = tl.samples;
    const std::int64_t t0 = s.front().t;
    double efc = 0.0;
    double q_cyc = 0.0;
    double efc_pow = 0.0;  // running efc^p10, caches the pow across steps
    std::int64_t next_checkpoint = opt.checkpoint_s;

    auto emit = [&](double elapsed_s) {
        Checkpoint c;
        c.t_s = elapsed_s;
        c.q_loss_cal = cal_coeff * std::pow(fit_time(p, elapsed_s), p.p4);
        c.q_loss_cyc = q_cyc;
        c.q_loss_total = c.q_loss_cal + c.q_loss_cyc;
        c.efc = efc;
        res.checkpoints.push_back(c);
    };

    auto advance = [&](double soc_mid, double abs_c, double dt_h) {
        const double defc = abs_c * dt_h * efc_scale;
        if (defc <= 0.0) return;
        const double k = (p.p5 + p.p6 * (1.0 - soc_mid) + p.p7 * abs_c) * t_term;
        const double new_pow = std::pow(efc + defc, p.p10);
        q_cyc += k * (new_pow - efc_pow);
        efc += defc;
        efc_pow = new_pow;
    };

    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const std::int64_t ta = s[i].t, tb = s[i + 1].t;
        const bool seam = tl.is_seam(i);
        const double abs_c = seam ? 0.0 : std::abs(s[i].c_rate);
        std::int64_t cur = ta;
        // split the interval at checkpoint boundaries so checkpoints land exactly
        while (next_checkpoint > cur - t0 && next_checkpoint < tb - t0) {
            const std::int64_t tc = t0 + next_checkpoint;
            if (abs_c > 0.0) {
                const double f0 = double(cur - ta) / double(tb - ta);
                const double f1 = double(tc - ta) / double(tb - ta);
                const double soc_mid =
                    s[i].soc + (s[i + 1].soc - s[i].soc) * 0.5 * (f0 + f1);
                advance(soc_mid, abs_c, double(tc - cur) / kSecondsPerHour);
            }
            emit(double(next_checkpoint));
            cur = tc;
            next_checkpoint += opt.checkpoint_s;
        }
        if (abs_c > 0.0 && tb > cur) {
            const double f0 = double(cur - ta) / double(tb - ta);
            const double soc_mid = s[i].soc + (s[i + 1].soc - s[i].soc) * 0.5 * (f0 + 1.0);
            advance(soc_mid, abs_c, double(tb - cur) / kSecondsPerHour);
        }
        if (tb - t0 == next_checkpoint) {
            emit(double(next_checkpoint));
            next_checkpoint += opt.checkpoint_s;
        }
    }
    // final state, unless the last sample was itself a checkpoint
    const double span = double(s.back().t - t0);
    if (res.checkpoints.empty() || res.checkpoints.back().t_s != span) emit(span);
    res.efc_total = efc;
    return res;
}

// ---- parameter files: `key = value` lines, '#' comments -------------------

BatteryParams load_battery_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open battery parameter file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string v) {
            const auto b = v.find_first_not_of(" \t\r");
            const auto e = v.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key in " + path, line_no);
        kv[key] = val;
    }
    auto need = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end())
            throw InvalidInput("battery parameter file " + path + " missing key '" + key + "'");
        return it->second;
    };
    BatteryParams p;
    p.design_name = need("design_name");
    const std::string unit = need("time_unit");
    if (unit == "days") p.time_unit = FitTimeUnit::Days;
    else if (unit == "years") p.time_unit = FitTimeUnit::Years;
    else throw InvalidInput("battery parameter file " + path + ": time_unit must be days|years");
    p.q0 = std::stod(need("q0"));
    double* fields[10] = {&p.p1, &p.p2, &p.p3, &p.p4, &p.p5, &p.p6, &p.p7, &p.p8, &p.p9, &p.p10};
    for (int i = 0; i < 10; ++i) *fields[i] = std::stod(need("p" + std::to_string(i + 1)));
    p.validate();
    return p;
}

void save_battery_params(const BatteryParams& p, const std::string& path,
                         const std::string& source_citation) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write battery parameter file: " + path);
    out << "design_name = " << p.design_name << "\n";
    out << "time_unit = " << (p.time_unit == FitTimeUnit::Days ? "days" : "years") << "\n";
    out << "q0 = " << p.q0 << "\n";
    const double fields[10] = {p.p1, p.p2, p.p3, p.p4, p.p5, p.p6, p.p7, p.p8, p.p9, p.p10};
    char buf[64];
    for (int i = 0; i < 10; ++i) {
        std::snprintf(buf, sizeof buf, "%.12g", fields[i]);
        out << "p" << (i + 1) << " = " << buf << "\n";
    }
    out << "source_citation = " << source_citation << "\n";
}

}  // namespace v2g
