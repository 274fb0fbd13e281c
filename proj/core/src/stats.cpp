#include "comdp/stats.hpp"

#include <algorithm>
#include <cmath>

#include "comdp/errors.hpp"
#include "comdp/rng.hpp"

namespace comdp {

double prob_superiority(const std::vector<double>& high, const std::vector<double>& low) {
    if (high.empty() || low.empty()) throw InputError("prob_superiority: empty sample");
    std::vector<double> sorted_low = low;
    std::sort(sorted_low.begin(), sorted_low.end());
    double favorable = 0.0;
    for (double h : high) {
        auto lo = std::lower_bound(sorted_low.begin(), sorted_low.end(), h);
        auto hi = std::upper_bound(lo, sorted_low.end(), h);
        favorable += double(sorted_low.end() - hi);  // low values strictly above h
        favorable += 0.5 * double(hi - lo);          // ties at half credit
    }
    return favorable / (double(high.size()) * double(low.size()));
}

double quantile(std::vector<double> sample, double q) {
    if (sample.empty()) throw InputError("quantile: empty sample");
    if (q < 0.0 || q > 1.0) throw InputError("quantile: level outside [0,1]");
    std::sort(sample.begin(), sample.end());
    double h = q * double(sample.size() - 1);
    std::size_t lo = std::size_t(std::floor(h));
    std::size_t hi = std::min(lo + 1, sample.size() - 1);
    double frac = h - double(lo);
    return sample[lo] + frac * (sample[hi] - sample[lo]);
}

std::optional<double> skewness(const std::vector<double>& sample) {
    std::size_t n = sample.size();
    if (n < 3) return std::nullopt;
    double mean = 0.0;
    for (double x : sample) mean += x;
    mean /= double(n);
    double m2 = 0.0, m3 = 0.0;
    for (double x : sample) {
        double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= double(n);
    m3 /= double(n);
    if (m2 <= 0.0) return std::nullopt;
    double g1 = m3 / std::pow(m2, 1.5);
    return g1 * std::sqrt(double(n) * double(n - 1)) / double(n - 2);
}

Ci bootstrap_ci(const std::vector<double>& sample,
                const std::function<double(const std::vector<double>&)>& statistic, int resamples,
                double level, std::uint64_t seed) {
    if (sample.size() < 2) throw InputError("bootstrap_ci: need at least two observations");
    Rng rng = make_stream(seed, {0x626f6f74ULL, sample.size()});
    std::vector<double> stats;
    stats.reserve(resamples);
    std::vector<double> resample(sample.size());
    for (int r = 0; r < resamples; ++r) {
        for (double& x : resample) x = sample[rng.next_below(sample.size())];
        stats.push_back(statistic(resample));
    }
    double alpha = 1.0 - level;
    return Ci{quantile(stats, alpha / 2.0), quantile(stats, 1.0 - alpha / 2.0)};
}

SummaryStats summarize(const std::vector<double>& sample, std::uint64_t seed) {
    if (sample.empty()) throw InputError("summarize: empty sample");
    SummaryStats st;
    double total = 0.0;
    st.min = sample.front();
    for (double x : sample) {
        total += x;
        st.min = std::min(st.min, x);
    }
    st.mean = total / double(sample.size());
    auto mean_stat = [](const std::vector<double>& xs) {
        double t = 0.0;
        for (double x : xs) t += x;
        return t / double(xs.size());
    };
    st.mean_ci = bootstrap_ci(sample, mean_stat, 4000, 0.95, seed);

    st.skew = skewness(sample);
    if (st.skew) {
        // Degenerate resamples report 0 so the percentile method stays defined.
        auto skew_stat = [](const std::vector<double>& xs) {
            return skewness(xs).value_or(0.0);
        };
        st.skew_ci = bootstrap_ci(sample, skew_stat, 4000, 0.95, seed ^ 0x736b6577ULL);
    }

    st.q95 = quantile(sample, 0.95);
    st.q50 = quantile(sample, 0.50);
    st.q25 = quantile(sample, 0.25);
    return st;
}

} // namespace comdp
