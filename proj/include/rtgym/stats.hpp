#pragma once

#include <span>
#include <utility>
#include <vector>

#include "rtgym/token_clock.hpp"

namespace rtgym {

// Arithmetic mean; throws EmptyCell on an empty input.
double mean(std::span<const double> xs);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

// P(T > t) for Student's t with `dof` degrees of freedom.
double student_t_sf(double t, double dof);

struct PairedTTest {
  double t = 0;
  double p = 0;  // one-sided, alternative: mean difference > 0
  int dof = 0;
  double mean_diff = 0;
  double sd_diff = 0;
};

// Tests whether a[i] - b[i] is positive on average. Throws
// DegenerateVariance when all differences are equal or n < 2.
PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b);
PairedTTest paired_t_test(std::span<const double> differences);

// Empirical CDF as (value, fraction <= value) steps, one per distinct value.
using CdfTable = std::vector<std::pair<TokenCount, double>>;
CdfTable token_usage_cdf(std::vector<TokenCount> counts);
// Fraction of the sample <= x (0 below the first step).
double cdf_at(const CdfTable& table, TokenCount x);

}  // namespace rtgym
