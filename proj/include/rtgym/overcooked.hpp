#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rtgym/rng.hpp"
#include "rtgym/types.hpp"

namespace rtgym::overcooked {

// Grid rows grow downward: Up decreases y.
struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

enum class Item : std::uint8_t { None, Onion, Dish, Soup };

// Layout glyphs: ' ' floor, '#' counter, 'O' onion dispenser, 'D' dish
// dispenser, 'P' pot, 'S' serving window.
inline constexpr char kFloor = ' ';
inline constexpr char kCounter = '#';
inline constexpr char kOnions = 'O';
inline constexpr char kDishes = 'D';
inline constexpr char kPot = 'P';
inline constexpr char kServe = 'S';

struct Pose {
  Cell cell;
  Action facing = Action::Up;
  friend bool operator==(const Pose&, const Pose&) = default;
};

struct Pot {
  Cell cell;
  int onions = 0;
  int ticks = 0;  // cooking ticks remaining; only non-zero when full

  bool cooking() const noexcept { return onions == 3 && ticks > 0; }
  bool ready() const noexcept { return onions == 3 && ticks == 0; }
  friend bool operator==(const Pot&, const Pot&) = default;
};

struct CounterItem {
  Cell cell;
  Item item = Item::None;
  friend bool operator==(const CounterItem&, const CounterItem&) = default;
};

enum class GoalKind : std::uint8_t { Pot, Counter };

struct PartnerPolicy {
  GoalKind kind = GoalKind::Pot;
  int target = 0;  // index into pots or counter_slots
  int blocked_turns = 0;
  int redraws = 0;
  CounterRng rng;
  friend bool operator==(const PartnerPolicy&, const PartnerPolicy&) = default;
};

struct KitchenState {
  std::vector<std::string> grid;  // grid[y][x]
  int counter_len = 0;
  std::vector<Pot> pots;
  std::vector<Cell> counter_slots;  // partner delivery targets
  std::vector<CounterItem> counter_items;  // sorted by cell
  Pose agent;
  Pose partner;
  Item agent_item = Item::None;
  Item partner_item = Item::None;
  PartnerPolicy partner_policy;
  int turn = 0;
  int step_limit = 100;
  int cook_time = 20;
  int patience = 5;
  double total_reward = 0;
  bool done = false;
  int dish_pickups = 0;
  int soup_pickups = 0;
  int serves = 0;

  int width() const { return grid.empty() ? 0 : static_cast<int>(grid.front().size()); }
  int height() const { return static_cast<int>(grid.size()); }
  char tile(Cell c) const;
  friend bool operator==(const KitchenState&, const KitchenState&) = default;
};

struct Transition {
  KitchenState state;
  double reward = 0;
  bool done = false;
};

inline constexpr double kDishReward = 3;
inline constexpr double kSoupReward = 5;
inline constexpr double kServeReward = 20;

Cell neighbor(Cell c, Action dir);
Cell faced_cell(const Pose& pose);
Item counter_item(const KitchenState& s, Cell c);

Transition step(const KitchenState& state, Action agent_action);

Action default_action(const KitchenState& state);

// The partner's next action; a pure function of the state.
Action partner_tick(const KitchenState& state);

// Reference high-score controller for the agent seat.
Action scripted_soup_oracle(const KitchenState& state);

KitchenState build_kitchen(const EnvConfig& config, int counter_len);
KitchenState reset(const EnvConfig& config);

nlohmann::json state_json(const KitchenState& state);
nlohmann::json observation_json(const KitchenState& state);
KitchenState state_from_json(const nlohmann::json& j);

std::string_view to_string(Item item);

}  // namespace rtgym::overcooked
