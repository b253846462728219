#include "rtgym/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rtgym/error.hpp"

namespace rtgym {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorCode::EmptyCell, "no samples to average");
  // Neumaier summation keeps long cells exact to the last bit that matters.
  double sum = 0, c = 0;
  for (double x : xs) {
    const double t = sum + x;
    c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return (sum + c) / static_cast<double>(xs.size());
}

namespace {

// Lentz's method for the continued fraction of I_x(a, b).
double beta_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  // The fraction converges fast only on one side of the mean.
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * beta_fraction(a, b, x) / a;
  return 1.0 - std::exp(log_front) * beta_fraction(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, double dof) {
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * incomplete_beta(dof / 2.0, 0.5, x);
  return t >= 0 ? tail : 1.0 - tail;
}

PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::Config, "paired samples differ in length");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return paired_t_test(d);
}

PairedTTest paired_t_test(std::span<const double> differences) {
  const std::size_t n = differences.size();
  if (n < 2) throw Error(ErrorCode::DegenerateVariance, "need at least two pairs");
  PairedTTest r;
  r.mean_diff = mean(differences);
  double ss = 0;
  for (double d : differences) ss += (d - r.mean_diff) * (d - r.mean_diff);
  r.sd_diff = std::sqrt(ss / static_cast<double>(n - 1));
  // Differences that agree to rounding noise count as equal.
  double scale = 0;
  for (double d : differences) scale = std::max(scale, std::abs(d));
  if (r.sd_diff <= 64 * std::numeric_limits<double>::epsilon() * scale)
    throw Error(ErrorCode::DegenerateVariance, "all paired differences are equal");
  r.dof = static_cast<int>(n - 1);
  r.t = r.mean_diff / (r.sd_diff / std::sqrt(static_cast<double>(n)));
  r.p = student_t_sf(r.t, r.dof);
  return r;
}

CdfTable token_usage_cdf(std::vector<TokenCount> counts) {
  CdfTable table;
  if (counts.empty()) return table;
  std::sort(counts.begin(), counts.end());
  const double n = static_cast<double>(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i + 1 < counts.size() && counts[i + 1] == counts[i]) continue;
    table.emplace_back(counts[i], static_cast<double>(i + 1) / n);
  }
  return table;
}

double cdf_at(const CdfTable& table, TokenCount x) {
  auto it = std::upper_bound(table.begin(), table.end(), x,
                             [](TokenCount v, const auto& step) { return v < step.first; });
  if (it == table.begin()) return 0;
  return std::prev(it)->second;
}

}  // namespace rtgym
