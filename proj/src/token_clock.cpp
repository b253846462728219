#include "rtgym/token_clock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rtgym/error.hpp"

namespace rtgym {

TokenClock::TokenClock(TokenCount step_budget) : budget_(step_budget) {
  if (budget_ == 0) throw Error(ErrorCode::Config, "step budget must be at least 1 token");
}

std::vector<StepBoundaryEvent> TokenClock::advance(TokenCount n) {
  if (n > std::numeric_limits<TokenCount>::max() - elapsed_) {
    throw Error(ErrorCode::Config, "token clock overflow");
  }
  std::vector<StepBoundaryEvent> events;
  TokenCount left = n;
  while (left > 0 && left >= remaining_in_step()) {
    const TokenCount chunk = remaining_in_step();
    const std::uint64_t step = current_step();
    elapsed_ += chunk;
    left -= chunk;
    events.push_back({step, chunk, left});
  }
  elapsed_ += left;
  return events;
}

double tokens_to_seconds(const WalltimeModel& model, TokenCount n, bool include_overhead) {
  const double t = model.alpha * static_cast<double>(n);
  return include_overhead ? t + model.beta : t;
}

WalltimeModel fit_walltime(std::span<const std::pair<double, double>> samples) {
  if (samples.size() < 2) throw Error(ErrorCode::DegenerateFit, "need at least two samples");

  // Centered two-pass sums; long double keeps noiseless data exact to ~1e-15.
  long double mx = 0, my = 0;
  for (const auto& [x, y] : samples) {
    mx += x;
    my += y;
  }
  const auto n = static_cast<long double>(samples.size());
  mx /= n;
  my /= n;

  long double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : samples) {
    const long double dx = x - mx, dy = y - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0) throw Error(ErrorCode::DegenerateFit, "all token counts are equal");

  const long double slope = sxy / sxx;
  if (!(slope > 0)) throw Error(ErrorCode::DegenerateFit, "fitted seconds-per-token is not positive");
  const long double intercept = my - slope * mx;

  long double ss_res = 0;
  for (const auto& [x, y] : samples) {
    const long double r = y - (slope * x + intercept);
    ss_res += r * r;
  }
  long double r2 = syy > 0 ? 1 - ss_res / syy : 1;
  r2 = std::clamp<long double>(r2, 0, 1);

  return {static_cast<double>(slope), static_cast<double>(intercept), static_cast<double>(r2)};
}

}  // namespace rtgym
