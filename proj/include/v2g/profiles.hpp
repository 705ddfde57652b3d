/*
 * profiles.hpp
 *
 * Behavioral feature extraction over the observed (pre-extension) window,
 * Pearson-correlation feature pruning, k-means clustering with seeded
 * k-means++ restarts, and elbow selection of k.
 *
 * The feature list mirrors the usual fleet-telemetry behavioral set and
 * deliberately contains near-duplicate definitions (cumulative vs per-day
 * variants); the correlation pruning pass is what removes them. SOC-derived
 * features are in percent. Charge-conditioned SOC features are NaN for
 * never-charging vehicles and are median-imputed before standardization.
 */
#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "v2g/core.hpp"

namespace v2g {

struct FeatureVector {
    static constexpr int kCount = 39;
    static const std::array<const char*, kCount>& names();

    std::array<double, kCount> values{};

    double operator[](int i) const { return values[std::size_t(i)]; }
    static int index_of(const std::string& name);  // -1 if unknown
};

// Features over one vehicle's base window. timeline is the baseline
// (immediate-charge) timeline for the same window as trips/events.
FeatureVector extract_features(const UsageTimeline& timeline,
                               const std::vector<ChargeEvent>& events,
                               const std::vector<TripRecord>& trips,
                               double capacity_kwh = 71.4);

Eigen::MatrixXd feature_matrix(const std::vector<FeatureVector>& rows);

// Greedy keep-first scan in feature order: a feature is dropped when its
// |Pearson r| with any already-retained feature exceeds the threshold.
// Zero-variance and all-missing columns are dropped up front. Needs >= 2 rows.
std::vector<int> prune_correlated(const Eigen::MatrixXd& m, double threshold = 0.9);

struct ClusterModel {
    int k = 0;
    Eigen::MatrixXd centroids;       // k x d, in standardized space
    Eigen::VectorXd feature_mean;    // d, from the training matrix
    Eigen::VectorXd feature_std;     // d (1.0 where degenerate)
    std::vector<int> assignment;     // per input row
    double wcss = 0.0;
    bool standardized = true;
};

struct KMeansOptions {
    int max_iter = 100;
    int restarts = 10;
    bool standardize = true;  // z-score columns before clustering
};

// Deterministic for a fixed seed: k-means++ seeding, Lloyd iterations until
// assignments are stable, best WCSS over the restarts kept. NaNs must be
// imputed beforehand (see impute_missing).
ClusterModel kmeans(const Eigen::MatrixXd& m, int k, std::uint64_t seed,
                    const KMeansOptions& opt = {});

// Replace NaNs with per-column medians (computed over non-missing entries).
Eigen::MatrixXd impute_missing(const Eigen::MatrixXd& m);

struct ElbowResult {
    int k = 1;
    bool degenerate = false;     // chord distances all ~0 (linear decay)
    bool non_monotone = false;   // wcss increased somewhere
};

// k (1-based, wcss[0] is k=1) with maximum perpendicular distance to the
// chord from (1, wcss front) to (k_max, wcss back).
ElbowResult elbow(std::span<const double> wcss_by_k);

}  // namespace v2g
