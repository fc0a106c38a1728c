#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gapbench/core/error.hpp"

namespace gapbench {

inline double mean(const std::vector<double>& x) {
    require(!x.empty(), "mean of empty sample");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double sample_variance(const std::vector<double>& x) {
    require(x.size() >= 2, "variance needs at least two samples");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

// Linear-interpolation percentile on a copy, p in [0, 100].
inline double percentile(std::vector<double> x, double p) {
    require(!x.empty(), "percentile of empty sample");
    require(p >= 0.0 && p <= 100.0, "percentile out of range");
    std::sort(x.begin(), x.end());
    const double rank = p / 100.0 * static_cast<double>(x.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(rank));
    const double frac = rank - static_cast<double>(lo);
    return x[lo] + frac * (x[hi] - x[lo]);
}

inline double median(const std::vector<double>& x) { return percentile(x, 50.0); }

// Kolmogorov-Smirnov statistic of a sample against U(0, 1).
inline double ks_uniform01(std::vector<double> u) {
    require(!u.empty(), "KS of empty sample");
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double cdf = u[i];  // U(0,1) CDF is the identity
        d = std::max(d, std::abs((static_cast<double>(i + 1)) / n - cdf));
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
    }
    return d;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Two-sided two-proportion z-test with pooled variance. Returns the p-value;
// degenerate pools (all successes or all failures) give p = 1.
inline double two_proportion_z_pvalue(int k1, int n1, int k2, int n2) {
    require(n1 > 0 && n2 > 0, "two_proportion_z_pvalue: empty groups");
    require(k1 >= 0 && k1 <= n1 && k2 >= 0 && k2 <= n2, "two_proportion_z_pvalue: counts");
    const double p1 = double(k1) / n1, p2 = double(k2) / n2;
    const double pool = double(k1 + k2) / double(n1 + n2);
    const double var = pool * (1.0 - pool) * (1.0 / n1 + 1.0 / n2);
    if (var <= 0.0) return 1.0;
    const double z = (p1 - p2) / std::sqrt(var);
    return 2.0 * (1.0 - normal_cdf(std::abs(z)));
}

// Pearson chi-square statistic for observed counts against uniform expectation.
inline double chi_square_uniform(const std::vector<int>& counts) {
    require(counts.size() >= 2, "chi_square_uniform: needs >= 2 buckets");
    double total = 0.0;
    for (int c : counts) {
        require(c >= 0, "chi_square_uniform: negative count");
        total += c;
    }
    require(total > 0.0, "chi_square_uniform: empty counts");
    const double expect = total / static_cast<double>(counts.size());
    double stat = 0.0;
    for (int c : counts) stat += (c - expect) * (c - expect) / expect;
    return stat;
}

}  // namespace gapbench
