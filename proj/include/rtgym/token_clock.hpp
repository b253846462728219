#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace rtgym {

using TokenCount = std::uint64_t;

struct StepBoundaryEvent {
  std::uint64_t completed_step;  // index of the step that just closed
  TokenCount tokens_in_step;     // tokens of this advance charged to that step
  TokenCount carried;            // tokens of this advance left after the boundary
  friend bool operator==(const StepBoundaryEvent&, const StepBoundaryEvent&) = default;
};

// Token-denominated time. The environment steps every `step_budget` tokens,
// whatever the agent is doing.
class TokenClock {
 public:
  explicit TokenClock(TokenCount step_budget);

  // Returns one event per step boundary crossed. A generation that ends
  // exactly on a boundary closes that step; overflow is carried forward.
  std::vector<StepBoundaryEvent> advance(TokenCount n);

  TokenCount tokens_elapsed() const noexcept { return elapsed_; }
  TokenCount step_budget() const noexcept { return budget_; }
  std::uint64_t current_step() const noexcept { return elapsed_ / budget_; }
  TokenCount offset_in_step() const noexcept { return elapsed_ % budget_; }
  TokenCount remaining_in_step() const noexcept { return budget_ - offset_in_step(); }

 private:
  TokenCount budget_;
  TokenCount elapsed_ = 0;
};

// Affine token-to-walltime model: seconds = alpha * tokens + beta.
struct WalltimeModel {
  double alpha = 0.0473;   // seconds per generated token
  double beta = 334.55;    // fixed overhead, seconds
  double r_squared = 1.0;

  // Reporting-only defaults; scoring never consults walltime.
  static WalltimeModel defaults() { return {}; }
};

double tokens_to_seconds(const WalltimeModel& model, TokenCount n, bool include_overhead);

// Ordinary least squares over (tokens, seconds) pairs. Throws DegenerateFit
// when fewer than two distinct token counts are present or the slope is not
// positive.
WalltimeModel fit_walltime(std::span<const std::pair<double, double>> samples);

}  // namespace rtgym
