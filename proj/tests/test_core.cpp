#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "gapbench/core/csv.hpp"
#include "gapbench/core/error.hpp"
#include "gapbench/core/rng.hpp"
#include "gapbench/core/svg.hpp"

using namespace gapbench;

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DerivedStreamsAreDistinct) {
    Rng a = Rng::derive(7, stream::kReset, 0, 0);
    Rng b = Rng::derive(7, stream::kActionNoise, 0, 0);
    Rng c = Rng::derive(7, stream::kReset, 1, 0);
    int same_ab = 0, same_ac = 0;
    for (int i = 0; i < 64; ++i) {
        uint64_t x = a.next_u64();
        if (x == b.next_u64()) ++same_ab;
        if (x == c.next_u64()) ++same_ac;
    }
    EXPECT_EQ(same_ab, 0);
    EXPECT_EQ(same_ac, 0);
}

TEST(Rng, Uniform01InHalfOpenRange) {
    Rng r(3);
    for (int i = 0; i < 100000; ++i) {
        double u = r.uniform01();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Rng, UniformRespectsBounds) {
    Rng r(4);
    for (int i = 0; i < 10000; ++i) {
        double u = r.uniform(-2.5, 1.5);
        ASSERT_GE(u, -2.5);
        ASSERT_LT(u, 1.5);
    }
}

TEST(Rng, NormalMomentsCloseToStandard) {
    Rng r(5);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = r.normal();
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    // 3-sigma bands for the sample mean and variance at n = 200000.
    EXPECT_NEAR(mean, 0.0, 3.0 / std::sqrt(double(n)));
    EXPECT_NEAR(var, 1.0, 3.0 * std::sqrt(2.0 / double(n)));
}

TEST(Rng, UniformIndexCoversAllBuckets) {
    Rng r(6);
    std::set<int> seen;
    for (int i = 0; i < 1000; ++i) {
        int k = static_cast<int>(r.uniform_index(7));
        ASSERT_GE(k, 0);
        ASSERT_LT(k, 7);
        seen.insert(k);
    }
    EXPECT_EQ(seen.size(), 7u);
}

TEST(FmtDouble, StableAcrossCalls) {
    EXPECT_EQ(fmt_double(0.1), "0.1");
    EXPECT_EQ(fmt_double(-3.0), "-3");
    EXPECT_EQ(fmt_double(1.0 / 3.0), fmt_double(1.0 / 3.0));
    EXPECT_EQ(fmt_double(0.0), "0");
}

TEST(Csv, RoundTrip) {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "gapbench_csv_roundtrip.csv";
    {
        CsvWriter w(path.string());
        w.header({"step", "value"});
        w.row({1.0, 0.25});
        w.row({2.0, -0.5});
    }
    CsvTable t = read_csv(path.string());
    ASSERT_EQ(t.columns.size(), 2u);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.columns[0], "step");
    EXPECT_DOUBLE_EQ(t.rows[1][1], -0.5);
    fs::remove(path);
}

TEST(Svg, DeterministicRender) {
    auto make = [] {
        SvgFigure fig(0, 1, 0, 1);
        fig.title("t");
        fig.polyline({0.0, 0.5, 1.0}, {0.0, 0.7, 0.2}, "#336699");
        fig.scatter({0.25}, {0.5}, "#cc3333");
        return fig.render();
    };
    EXPECT_EQ(make(), make());
    EXPECT_NE(make().find("<svg"), std::string::npos);
}

TEST(Errors, RequireThrowsContractViolation) {
    EXPECT_NO_THROW(require(true, "fine"));
    EXPECT_THROW(require(false, "broken"), ContractViolation);
    EXPECT_THROW(require_finite(std::nan(""), "x"), NumericError);
    EXPECT_NO_THROW(require_finite(1.0, "x"));
}

#include "gapbench/core/stats.hpp"

TEST(Stats, PercentileInterpolates) {
    std::vector<double> x = {4.0, 1.0, 3.0, 2.0};
    EXPECT_DOUBLE_EQ(percentile(x, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(percentile(x, 100.0), 4.0);
    EXPECT_DOUBLE_EQ(percentile(x, 50.0), 2.5);
    EXPECT_DOUBLE_EQ(percentile(x, 25.0), 1.75);
    EXPECT_DOUBLE_EQ(median({5.0, 1.0, 9.0}), 5.0);
}

TEST(Stats, KsStatisticSmallForUniformGrid) {
    std::vector<double> u;
    const int n = 1000;
    for (int i = 0; i < n; ++i) u.push_back((i + 0.5) / n);
    EXPECT_LT(ks_uniform01(u), 1.0 / n);
}

TEST(Stats, KsStatisticLargeForSkewedSample) {
    std::vector<double> u;
    for (int i = 0; i < 1000; ++i) u.push_back(0.5 + 0.5 * (i + 0.5) / 1000.0);
    EXPECT_GT(ks_uniform01(u), 0.4);
}

TEST(Stats, TwoProportionPValueMatchesHandComputation) {
    // p1=0.6 vs p2=0.4 at n=100 each: z = 2.8284, two-sided p = 0.004678.
    EXPECT_NEAR(two_proportion_z_pvalue(60, 100, 40, 100), 0.004678, 3e-4);
    EXPECT_NEAR(two_proportion_z_pvalue(50, 100, 50, 100), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(two_proportion_z_pvalue(0, 50, 0, 50), 1.0);
}

TEST(Stats, ChiSquareZeroForPerfectlyUniformCounts) {
    EXPECT_DOUBLE_EQ(chi_square_uniform({10, 10, 10, 10}), 0.0);
    EXPECT_NEAR(chi_square_uniform({15, 5, 10, 10}), 5.0, 1e-12);
}
