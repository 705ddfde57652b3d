/*
 * stats.hpp
 *
 * Nonparametric tests and OLS slope inference used for every fleet-level
 * claim: Wilcoxon signed-rank against a fixed median, Mann-Whitney U,
 * Kruskal-Wallis, and simple linear regression with a t-test on the slope.
 *
 * Small samples take exact enumeration paths (signed-rank n <= 25 via a
 * subset-sum table, Mann-Whitney combined n <= 12 via full combination
 * enumeration); larger samples use normal approximations with midrank tie
 * corrections and a 0.5 continuity correction.
 */
#pragma once

#include <span>
#include <string>
#include <vector>

#include "v2g/core.hpp"

namespace v2g {

enum class Alternative { TwoSided, Greater, Less };

std::string to_string(Alternative a);

struct TestResult {
    double statistic = 0.0;  // W+ for signed-rank, U1 for Mann-Whitney, H for Kruskal-Wallis
    double p_value = 1.0;
    int n1 = 0;
    int n2 = 0;  // 0 where not applicable
    Alternative alternative = Alternative::TwoSided;
    bool exact = false;

    std::string method() const { return exact ? "exact" : "normal-approximation"; }
};

struct RegressionResult {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
    int n = 0;
};

// Signed-rank test of H0: median = mu0. Zero differences are dropped; at
// least 5 nonzero differences required. "Greater" means the sample median
// exceeds mu0 (large W+).
TestResult wilcoxon_signed_rank(std::span<const double> sample, double mu0,
                                Alternative alt = Alternative::TwoSided);

struct MwuOptions {
    bool continuity_correction = true;
    bool force_normal = false;  // skip the exact path regardless of size
};

// U is reported for the first sample; "Greater" means the first sample
// tends larger.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                          Alternative alt = Alternative::TwoSided, const MwuOptions& opt = {});

// Tie-corrected H with a chi-squared p on (groups - 1) degrees of freedom.
TestResult kruskal_wallis(std::span<const std::vector<double>> groups);

// Least squares y = intercept + slope*x with a two-sided t-test on the
// slope; requires n >= 3 and variance(x) > 0.
RegressionResult ols_slope(std::span<const double> x, std::span<const double> y);

// distribution helpers (also used by the economics bootstrap and tests)
double normal_sf(double z);              // P(Z >= z)
double chi2_sf(double x, int df);        // upper tail
double student_t_two_sided_p(double t, int df);

// pooled midranks (average rank for ties), 1-based
std::vector<double> midranks(std::span<const double> values);

}  // namespace v2g
