#include "v2g/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace v2g {

std::string to_string(Alternative a) {
    switch (a) {
        case Alternative::TwoSided: return "two-sided";
        case Alternative::Greater: return "greater";
        case Alternative::Less: return "less";
    }
    return "?";
}

// ---- special functions -------------------------------------------------------

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// regularized incomplete gamma, series and continued-fraction branches
static double gamma_p_series(double a, double x) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

static double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double chi2_sf(double x, int df) {
    if (x <= 0.0) return 1.0;
    const double a = 0.5 * df, hx = 0.5 * x;
    return hx < a + 1.0 ? 1.0 - gamma_p_series(a, hx) : gamma_q_contfrac(a, hx);
}

static double beta_contfrac(double a, double b, double x) {
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    const double tiny = 1e-300;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-14) break;
    }
    return h;
}

static double incbeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                      b * std::log(1.0 - x);
    const double front = std::exp(ln);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_contfrac(a, b, x) / a;
    return 1.0 - front * beta_contfrac(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, int df) {
    if (df <= 0) throw InvalidInput("student_t_two_sided_p: df must be > 0");
    if (!std::isfinite(t)) return 0.0;
    const double x = df / (df + t * t);
    return incbeta(0.5 * df, 0.5, x);
}

// ---- ranking -----------------------------------------------------------------

std::vector<double> midranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
        const double r = 0.5 * (double(i + 1) + double(j + 1));  // average of 1-based positions
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

// sum of (t^3 - t) over tie groups
static double tie_term(std::span<const double> values) {
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    double s = 0.0;
    std::size_t i = 0;
    while (i < v.size()) {
        std::size_t j = i;
        while (j + 1 < v.size() && v[j + 1] == v[i]) ++j;
        const double t = double(j - i + 1);
        s += t * t * t - t;
        i = j + 1;
    }
    return s;
}

static double one_sided_from_counts(double p_ge, double p_le, Alternative alt) {
    switch (alt) {
        case Alternative::Greater: return p_ge;
        case Alternative::Less: return p_le;
        case Alternative::TwoSided: return std::min(1.0, 2.0 * std::min(p_ge, p_le));
    }
    return 1.0;
}

// ---- Wilcoxon signed-rank ------------------------------------------------------

TestResult wilcoxon_signed_rank(std::span<const double> sample, double mu0, Alternative alt) {
    std::vector<double> diff;
    diff.reserve(sample.size());
    for (double v : sample)
        if (v != mu0) diff.push_back(v - mu0);
    if (!sample.empty() && diff.empty())
        throw InvalidInput("wilcoxon_signed_rank: degenerate sample, all differences zero");
    const int n = static_cast<int>(diff.size());
    if (n < 5)
        throw InvalidInput("wilcoxon_signed_rank: need at least 5 nonzero differences, have " +
                           std::to_string(n));

    std::vector<double> abs_d(diff.size());
    for (std::size_t i = 0; i < diff.size(); ++i) abs_d[i] = std::abs(diff[i]);
    const auto ranks = midranks(abs_d);
    double w_plus = 0.0;
    for (std::size_t i = 0; i < diff.size(); ++i)
        if (diff[i] > 0) w_plus += ranks[i];

    TestResult res;
    res.statistic = w_plus;
    res.n1 = n;
    res.alternative = alt;

    if (n <= 25) {
        // exact null: subset-sum distribution of doubled midranks (integers)
        std::vector<long long> r2(diff.size());
        long long total = 0;
        for (std::size_t i = 0; i < ranks.size(); ++i) {
            r2[i] = std::llround(2.0 * ranks[i]);
            total += r2[i];
        }
        std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
        count[0] = 1.0;
        long long reach = 0;
        for (long long r : r2) {
            for (long long s = reach; s >= 0; --s)
                if (count[s] != 0.0) count[s + r] += count[s];
            reach += r;
        }
        const double denom = std::ldexp(1.0, n);  // 2^n
        const long long w2 = std::llround(2.0 * w_plus);
        double ge = 0.0, le = 0.0;
        for (long long s = 0; s <= total; ++s) {
            if (s >= w2) ge += count[s];
            if (s <= w2) le += count[s];
        }
        res.exact = true;
        res.p_value = one_sided_from_counts(ge / denom, le / denom, alt);
        return res;
    }

    const double mean = n * (n + 1) / 4.0;
    const double var = n * (n + 1) * (2.0 * n + 1.0) / 24.0 - tie_term(abs_d) / 48.0;
    const double sd = std::sqrt(var);
    const double cc = 0.5;
    double p;
    switch (alt) {
        case Alternative::Greater: p = normal_sf((w_plus - mean - cc) / sd); break;
        case Alternative::Less: p = normal_sf((mean - w_plus - cc) / sd); break;
        default: {
            const double z = (std::abs(w_plus - mean) - cc) / sd;
            p = std::min(1.0, 2.0 * normal_sf(z));
        }
    }
    res.p_value = p;
    return res;
}

// ---- Mann-Whitney U ------------------------------------------------------------

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b, Alternative alt,
                          const MwuOptions& opt) {
    const int n1 = static_cast<int>(a.size()), n2 = static_cast<int>(b.size());
    if (n1 < 1 || n2 < 1) throw InvalidInput("mann_whitney_u: empty sample");
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = midranks(pooled);
    double r1 = 0.0;
    for (int i = 0; i < n1; ++i) r1 += ranks[i];
    const double u1 = r1 - n1 * (n1 + 1) / 2.0;

    TestResult res;
    res.statistic = u1;
    res.n1 = n1;
    res.n2 = n2;
    res.alternative = alt;

    const int n = n1 + n2;
    if (n <= 12 && !opt.force_normal) {
        // exact permutation: every assignment of n1 pooled positions to the
        // first sample is equally likely under H0
        std::vector<int> comb(n1);
        std::iota(comb.begin(), comb.end(), 0);
        double total = 0.0, ge = 0.0, le = 0.0;
        const double eps = 1e-9;
        while (true) {
            double rs = 0.0;
            for (int i : comb) rs += ranks[i];
            const double u = rs - n1 * (n1 + 1) / 2.0;
            total += 1.0;
            if (u >= u1 - eps) ge += 1.0;
            if (u <= u1 + eps) le += 1.0;
            // next combination in lexicographic order
            int i = n1 - 1;
            while (i >= 0 && comb[i] == n - n1 + i) --i;
            if (i < 0) break;
            ++comb[i];
            for (int j = i + 1; j < n1; ++j) comb[j] = comb[j - 1] + 1;
        }
        res.exact = true;
        res.p_value = one_sided_from_counts(ge / total, le / total, alt);
        return res;
    }

    const double mean = n1 * double(n2) / 2.0;
    const double var =
        (n1 * double(n2) / 12.0) * ((n + 1.0) - tie_term(pooled) / (double(n) * (n - 1.0)));
    if (var <= 0.0) {  // all pooled values identical
        res.p_value = 1.0;
        return res;
    }
    const double sd = std::sqrt(var);
    const double cc = opt.continuity_correction ? 0.5 : 0.0;
    double p;
    switch (alt) {
        case Alternative::Greater: p = normal_sf((u1 - mean - cc) / sd); break;
        case Alternative::Less: p = normal_sf((mean - u1 - cc) / sd); break;
        default: {
            const double z = (std::abs(u1 - mean) - cc) / sd;
            p = std::min(1.0, 2.0 * normal_sf(std::max(0.0, z)));
        }
    }
    res.p_value = p;
    return res;
}

// ---- Kruskal-Wallis ------------------------------------------------------------

TestResult kruskal_wallis(std::span<const std::vector<double>> groups) {
    if (groups.size() < 2) throw InvalidInput("kruskal_wallis: need at least 2 groups");
    std::vector<double> pooled;
    for (const auto& g : groups) {
        if (g.empty()) throw InvalidInput("kruskal_wallis: empty group");
        pooled.insert(pooled.end(), g.begin(), g.end());
    }
    const int n = static_cast<int>(pooled.size());
    if (n < 5) throw InvalidInput("kruskal_wallis: need total n >= 5");
    const auto ranks = midranks(pooled);

    double h = 0.0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double rs = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) rs += ranks[offset + i];
        h += rs * rs / double(g.size());
        offset += g.size();
    }
    h = 12.0 / (double(n) * (n + 1.0)) * h - 3.0 * (n + 1.0);
    const double correction = 1.0 - tie_term(pooled) / (std::pow(double(n), 3) - n);
    h = correction > 0.0 ? h / correction : 0.0;

    TestResult res;
    res.statistic = h;
    res.n1 = n;
    res.alternative = Alternative::TwoSided;
    res.p_value = chi2_sf(h, static_cast<int>(groups.size()) - 1);
    return res;
}

// ---- OLS slope -----------------------------------------------------------------

RegressionResult ols_slope(std::span<const double> x, std::span<const double> y) {
    const int n = static_cast<int>(x.size());
    if (n < 3 || y.size() != x.size()) throw InvalidInput("ols_slope: need n >= 3 matched pairs");
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) throw InvalidInput("ols_slope: degenerate design, x has zero variance");

    RegressionResult r;
    r.n = n;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double ssr = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e = y[i] - (r.intercept + r.slope * x[i]);
        ssr += e * e;
    }
    const double sigma2 = std::max(0.0, ssr) / (n - 2);
    r.stderr_slope = std::sqrt(sigma2 / sxx);
    if (r.stderr_slope == 0.0) {
        r.t_stat = r.slope == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        r.p_value = r.slope == 0.0 ? 1.0 : 0.0;
    } else {
        r.t_stat = r.slope / r.stderr_slope;
        r.p_value = student_t_two_sided_p(r.t_stat, n - 2);
    }
    return r;
}

}  // namespace v2g
