#pragma once

#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rtgym/rng.hpp"
#include "rtgym/types.hpp"

namespace rtgym::snake {

// Interior cells are x in [0, width), y in [0, height); everything outside is
// wall. Up increases y.
struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct Food {
  Cell cell;
  int expires_at = 0;  // live while turn < expires_at
  friend bool operator==(const Food&, const Food&) = default;
};

struct SnakeState {
  int width = 10;
  int height = 10;
  std::vector<Cell> body;  // head first
  Action heading = Action::Right;
  std::vector<Cell> obstacles;
  std::vector<Food> foods;
  int turn = 0;
  int eaten = 0;
  bool alive = true;
  bool done = false;
  double total_reward = 0;
  int step_limit = 100;
  int food_count = 3;
  int food_lifetime = 15;
  int initial_length = 3;
  CounterRng food_rng;

  const Cell& head() const { return body.front(); }
  friend bool operator==(const SnakeState&, const SnakeState&) = default;
};

struct Transition {
  SnakeState state;
  double reward = 0;
  bool done = false;
};

Cell neighbor(Cell c, Action dir);
Action opposite(Action dir);
bool inside(const SnakeState& s, Cell c);
bool is_obstacle(const SnakeState& s, Cell c);

Transition step(const SnakeState& state, Action action);

// The current heading.
Action default_action(const SnakeState& state);

// Depth-limited exhaustive search maximizing (food eaten, survival steps,
// -distance to the nearest food). Ties resolve Up < Down < Left < Right;
// reversal inputs collapse onto the heading they are equivalent to.
Action greedy_oracle(const SnakeState& state, int depth);

// Score the oracle ranks plans by, exposed so tests can enumerate plans.
struct PlanValue {
  int eaten = 0;
  int survived = 0;
  int neg_distance = 0;
  friend auto operator<=>(const PlanValue&, const PlanValue&) = default;
};
PlanValue evaluate_plan(const SnakeState& state, const std::vector<Action>& plan);

SnakeState generate_layout(const EnvConfig& config, int attempt, int obstacle_count);
SnakeState reset(const EnvConfig& config);

nlohmann::json state_json(const SnakeState& state);
nlohmann::json observation_json(const SnakeState& state);
SnakeState state_from_json(const nlohmann::json& j);

}  // namespace rtgym::snake
