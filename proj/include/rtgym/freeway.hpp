#pragma once

#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rtgym/types.hpp"

namespace rtgym::freeway {

inline constexpr int kGoalLane = 9;

enum class CarDirection : std::uint8_t { Left, Right };

// Positions live on a ring of `ring` cells centred on the player's column
// x = 0. Right-moving cars occupy [head - span_len, head], left-moving cars
// [head, head + span_len].
struct Car {
  int lane = 1;
  int head = 0;
  int span_len = 0;
  CarDirection direction = CarDirection::Right;
  int speed = 1;

  int tail() const noexcept {
    return direction == CarDirection::Right ? head - span_len : head + span_len;
  }
  friend bool operator==(const Car&, const Car&) = default;
};

struct Span {
  int lo;
  int hi;
  friend bool operator==(const Span&, const Span&) = default;
};

struct FreewayState {
  int player_y = 0;
  int turn = 0;
  std::vector<Car> cars;  // positions at `turn`
  std::optional<Action> last_action;
  int steps_taken = 0;
  int step_limit = 100;
  int ring = 96;
  int min_steps = 0;  // difficulty measure of the generated layout
  bool done = false;
  double total_reward = 0;

  friend bool operator==(const FreewayState&, const FreewayState&) = default;
};

struct Transition {
  FreewayState state;
  double reward = 0;
  bool done = false;
};

// Raw (unwrapped) span after dt turns.
Span car_span_at(const Car& car, int dt);

// Wraps a coordinate into (-ring/2, ring/2].
int wrap(int x, int ring);
Span normalize_span(Span span, int ring);

// Ring-aware inclusive membership of x = 0.
bool span_contains_zero(Span span, int ring);

Car advance_car(const Car& car, int dt, int ring);

bool collides(const FreewayState& state, int lane);

Transition step(const FreewayState& state, Action action);

// Repeats the last attempted action; Stay before any action was played.
Action default_action(const FreewayState& state);

// Breadth-first search over (turn mod traffic period, lane) that never enters
// a colliding configuration. Returns the action sequence reaching the goal
// lane in the fewest turns, or nullopt when impossible within the step limit.
std::optional<std::vector<Action>> shortest_path(const FreewayState& state);

// Length of shortest_path; throws Unreachable.
int min_steps_oracle(const FreewayState& state);

int traffic_period(const FreewayState& state);

// Single layout draw for (seed, attempt). Not banded.
FreewayState generate_layout(const EnvConfig& config, int attempt);

// Deterministic banded reset; throws GenerationExhausted.
FreewayState reset(const EnvConfig& config);

nlohmann::json state_json(const FreewayState& state);
// Shape consumed by code policies: player_states / car_states / turn.
nlohmann::json observation_json(const FreewayState& state);
FreewayState state_from_json(const nlohmann::json& j);

}  // namespace rtgym::freeway
