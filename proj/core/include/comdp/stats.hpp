#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace comdp {

/// Probability of superiority: P(X_high < X_low) + 0.5 P(X_high = X_low),
/// the normalized Mann-Whitney U with half credit for ties. O(n log n).
double prob_superiority(const std::vector<double>& high, const std::vector<double>& low);

/// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> sample, double q);

/// Fisher-Pearson bias-corrected skewness g1 sqrt(n(n-1))/(n-2); empty for
/// fewer than three points or zero variance.
std::optional<double> skewness(const std::vector<double>& sample);

struct Ci {
    double lo = 0.0;
    double hi = 0.0;
};

/// Percentile bootstrap confidence interval for an arbitrary statistic;
/// deterministic for a fixed seed.
Ci bootstrap_ci(const std::vector<double>& sample,
                const std::function<double(const std::vector<double>&)>& statistic,
                int resamples = 4000, double level = 0.95, std::uint64_t seed = 0);

struct SummaryStats {
    double mean = 0.0;
    Ci mean_ci;
    double min = 0.0;
    std::optional<double> skew;
    Ci skew_ci;
    double q95 = 0.0;
    double q50 = 0.0;
    double q25 = 0.0;
};

/// Mean/min/skewness with 95% percentile bootstrap CIs (4000 resamples) and
/// the q95/q50/q25 quantiles.
SummaryStats summarize(const std::vector<double>& sample, std::uint64_t seed);

} // namespace comdp
