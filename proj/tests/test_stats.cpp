#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "comdp/harness.hpp"
#include "comdp/rng.hpp"
#include "comdp/stats.hpp"

using namespace comdp;

TEST_CASE("probability of superiority on hand-counted samples") {
    CHECK(prob_superiority({1, 3}, {2, 4}) == 0.75); // 3 of 4 pairs favor high
    CHECK(prob_superiority({1, 1}, {1, 1}) == 0.5);  // all ties
    CHECK(prob_superiority({0, 0}, {1, 2}) == 1.0);
    CHECK_THROWS(prob_superiority({}, {1.0}));
}

TEST_CASE("probability of superiority is complementary") {
    Rng rng(3);
    std::vector<double> a, b;
    for (int i = 0; i < 200; ++i) {
        a.push_back(rng.uniform(0, 2));
        b.push_back(rng.uniform(0.5, 2.5));
    }
    CHECK(prob_superiority(a, a) == 0.5);
    CHECK(prob_superiority(a, b) + prob_superiority(b, a) == doctest::Approx(1.0));
}

TEST_CASE("skewness on reference samples") {
    CHECK(*skewness({-1, 0, 1}) == 0.0);
    CHECK(*skewness({0, 0, 1}) > 0.0);
    CHECK_FALSE(skewness({1, 1, 1}).has_value()); // zero variance
    CHECK_FALSE(skewness({1, 2}).has_value());

    // Exponential(1) population skewness is 2.
    Rng rng(7);
    std::vector<double> sample(100000);
    for (double& x : sample) x = rng.exponential();
    CHECK(std::fabs(*skewness(sample) - 2.0) < 0.1);
}

TEST_CASE("quantiles interpolate linearly") {
    std::vector<double> v{4, 1, 3, 2};
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 4.0);
    CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("bootstrap confidence intervals") {
    auto mean_stat = [](const std::vector<double>& xs) {
        double t = 0;
        for (double x : xs) t += x;
        return t / double(xs.size());
    };

    // Degenerate sample: the interval collapses onto the constant.
    Ci flat = bootstrap_ci({2, 2, 2, 2}, mean_stat, 500, 0.95, 1);
    CHECK(flat.lo == 2.0);
    CHECK(flat.hi == 2.0);

    // The interval brackets the point estimate for means.
    Rng rng(11);
    std::vector<double> sample(200);
    for (double& x : sample) x = rng.uniform(0, 1);
    Ci ci = bootstrap_ci(sample, mean_stat, 2000, 0.95, 3);
    double m = mean_stat(sample);
    CHECK(ci.lo <= m);
    CHECK(m <= ci.hi);

    // N(0,1) with n = 10^4: CI width near 2 * 1.96 / 100.
    std::vector<double> normal(10000);
    for (double& x : normal) x = rng.normal(0.0, 1.0);
    Ci nci = bootstrap_ci(normal, mean_stat, 4000, 0.95, 5);
    double width = nci.hi - nci.lo;
    double expected = 2.0 * 1.96 / 100.0;
    CHECK(std::fabs(width - expected) < 0.2 * expected);
}

TEST_CASE("bootstrap is deterministic per seed") {
    Rng rng(21);
    std::vector<double> sample(100);
    for (double& x : sample) x = rng.uniform(0, 1);
    auto stat = [](const std::vector<double>& xs) {
        double t = 0;
        for (double x : xs) t += x;
        return t / double(xs.size());
    };
    Ci a = bootstrap_ci(sample, stat, 1000, 0.9, 42);
    Ci b = bootstrap_ci(sample, stat, 1000, 0.9, 42);
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);
    Ci c = bootstrap_ci(sample, stat, 1000, 0.9, 43);
    CHECK((c.lo != a.lo || c.hi != a.hi));
}

TEST_CASE("summary statistics respect their invariants") {
    Rng rng(9);
    std::vector<double> sample(400);
    for (double& x : sample) x = rng.uniform(0, 1);
    SummaryStats st = summarize(sample, 17);
    CHECK(st.mean_ci.lo <= st.mean);
    CHECK(st.mean <= st.mean_ci.hi);
    CHECK(st.q25 <= st.q50);
    CHECK(st.q50 <= st.q95);
    CHECK(st.min <= st.q25);
}

TEST_CASE("histogram emission trims the right tail and handles empties") {
    std::string path = (std::filesystem::temp_directory_path() / "comdp_hist_test.svg").string();
    CHECK_FALSE(write_histogram_svg(path, {}, 10, 0.05, "empty"));

    std::vector<double> values;
    Rng rng(1);
    for (int i = 0; i < 500; ++i) values.push_back(rng.exponential());
    CHECK(write_histogram_svg(path, values, 20, 0.05, "exp"));
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("<svg") != std::string::npos);
    CHECK(text.find("<rect") != std::string::npos);
    std::filesystem::remove(path);
}
