#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include "gen.hpp"
#include "rtgym/error.hpp"
#include "rtgym/stats.hpp"

using namespace rtgym;
using rtgym::testing::Gen;

namespace {

double boost_sf(double t, double dof) {
  return boost::math::cdf(boost::math::complement(boost::math::students_t(dof), t));
}

}  // namespace

TEST(Stats, PairedTOnThreeDifferences) {
  const std::vector<double> d{0.1, 0.2, 0.3};
  const auto r = paired_t_test(d);
  EXPECT_NEAR(r.t, 3.4641016, 1e-6);
  EXPECT_NEAR(r.t, 2 * std::sqrt(3.0), 1e-12);
  EXPECT_EQ(r.dof, 2);
  EXPECT_GT(r.p, 0.03);
  EXPECT_LT(r.p, 0.04);
  EXPECT_NEAR(r.p, boost_sf(r.t, 2), 1e-12);
  EXPECT_NEAR(r.mean_diff, 0.2, 1e-15);
}

TEST(Stats, TwoSampleFormMatchesDifferences) {
  const std::vector<double> a{1.0, 2.5, 3.0, 4.25};
  const std::vector<double> b{0.5, 2.0, 3.5, 3.0};
  const std::vector<double> d{0.5, 0.5, -0.5, 1.25};
  const auto x = paired_t_test(a, b);
  const auto y = paired_t_test(d);
  EXPECT_DOUBLE_EQ(x.t, y.t);
  EXPECT_DOUBLE_EQ(x.p, y.p);
  const std::vector<double> shorter{1.0};
  EXPECT_THROW(paired_t_test(a, shorter), Error);
}

TEST(Stats, DegenerateVariance) {
  for (const std::vector<double>& d : {std::vector<double>{0.4, 0.4, 0.4}, std::vector<double>{1.0}}) {
    try {
      paired_t_test(d);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::DegenerateVariance);
    }
  }
}

TEST(Stats, TailMatchesBoostAcrossRange) {
  Gen gen(17);
  for (int i = 0; i < 2000; ++i) {
    const double dof = gen.range(1, 200);
    const double t = gen.real(-8, 8);
    EXPECT_NEAR(student_t_sf(t, dof), boost_sf(t, dof), 1e-10) << "t=" << t << " dof=" << dof;
  }
}

TEST(Stats, IncompleteBetaMatchesBoost) {
  Gen gen(5);
  for (int i = 0; i < 1000; ++i) {
    const double a = gen.real(0.1, 50.1), b = gen.real(0.1, 50.1), x = gen.real(0, 1);
    EXPECT_NEAR(incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-10);
  }
  EXPECT_EQ(incomplete_beta(2, 3, 0), 0.0);
  EXPECT_EQ(incomplete_beta(2, 3, 1), 1.0);
}

// Adding the same constant to both arms leaves the test unchanged.
TEST(Stats, TranslationInvariance1000Vectors) {
  Gen gen(99);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = gen.range(2, 40);
    std::vector<double> a(n), b(n);
    for (int k = 0; k < n; ++k) {
      a[k] = gen.real(-0.5, 1.5);
      b[k] = gen.real(-0.7, 1.3);
    }
    const double shift = gen.real(-100, 100);
    std::vector<double> a2(a), b2(b);
    for (auto& v : a2) v += shift;
    for (auto& v : b2) v += shift;
    const auto r = paired_t_test(a, b);
    const auto s = paired_t_test(a2, b2);
    EXPECT_NEAR(r.t, s.t, 1e-9 * std::max(1.0, std::abs(r.t)));
    EXPECT_NEAR(r.p, s.p, 1e-9);
    EXPECT_EQ(r.dof, n - 1);
    EXPECT_NEAR(r.p, boost_sf(r.t, n - 1), 1e-10);
    ++checked;
  }
  EXPECT_EQ(checked, 1000);
}

TEST(Stats, MeanAndPermutation) {
  Gen gen(3);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> d(static_cast<std::size_t>(gen.range(2, 30)));
    for (auto& v : d) v = gen.real(-0.3, 0.7);
    const auto r = paired_t_test(d);
    std::vector<double> shuffled(d);
    std::shuffle(shuffled.begin(), shuffled.end(), gen.engine());
    const auto s = paired_t_test(shuffled);
    EXPECT_NEAR(r.t, s.t, 1e-9 * std::max(1.0, std::abs(r.t)));
    EXPECT_NEAR(mean(d), std::accumulate(d.begin(), d.end(), 0.0) / d.size(), 1e-12);
  }
  EXPECT_THROW(mean(std::vector<double>{}), Error);
}

TEST(Stats, TokenUsageCdf) {
  const auto t = token_usage_cdf({300, 100, 200, 100});
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0], (std::pair<TokenCount, double>{100, 0.5}));
  EXPECT_EQ(t[2].second, 1.0);
  EXPECT_EQ(cdf_at(t, 99), 0.0);
  EXPECT_EQ(cdf_at(t, 150), 0.5);
  EXPECT_EQ(cdf_at(t, 10000), 1.0);

  // Property: cdf_at equals the counted fraction for random samples.
  Gen gen(11);
  for (int i = 0; i < 100; ++i) {
    std::vector<TokenCount> xs(static_cast<std::size_t>(gen.range(1, 60)));
    for (auto& x : xs) x = static_cast<TokenCount>(gen.range(0, 50));
    const auto table = token_usage_cdf(xs);
    for (TokenCount q = 0; q <= 52; ++q) {
      const double want =
          static_cast<double>(std::count_if(xs.begin(), xs.end(), [&](TokenCount x) { return x <= q; })) /
          static_cast<double>(xs.size());
      ASSERT_DOUBLE_EQ(cdf_at(table, q), want);
    }
  }
}
