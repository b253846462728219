#include "rtgym/snake.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <limits>

#include <nlohmann/json.hpp>

#include "rtgym/error.hpp"

namespace rtgym::snake {

namespace {

constexpr std::array kDirections{Action::Up, Action::Down, Action::Left, Action::Right};
constexpr int kDeadDistance = 1000;

bool contains(const std::vector<Cell>& cells, Cell c) {
  return std::find(cells.begin(), cells.end(), c) != cells.end();
}


void spawn_foods(SnakeState& s) {
  if (static_cast<int>(s.foods.size()) >= s.food_count) return;
  std::vector<char> taken(static_cast<std::size_t>(s.width * s.height), 0);
  auto mark = [&](Cell c) {
    if (c.x >= 0 && c.x < s.width && c.y >= 0 && c.y < s.height) taken[c.y * s.width + c.x] = 1;
  };
  for (const Cell& c : s.body) mark(c);
  for (const Cell& c : s.obstacles) mark(c);
  for (const Food& f : s.foods) mark(f.cell);
  std::vector<Cell> free;
  free.reserve(taken.size());
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x)
      if (!taken[y * s.width + x]) free.push_back({x, y});
  while (static_cast<int>(s.foods.size()) < s.food_count && !free.empty()) {
    const auto i = s.food_rng.below(free.size());
    s.foods.push_back({free[i], s.turn + s.food_lifetime});
    free.erase(free.begin() + static_cast<std::ptrdiff_t>(i));
  }
}

int nearest_food(const SnakeState& s) {
  int best = std::numeric_limits<int>::max();
  for (const Food& f : s.foods) {
    best = std::min(best, std::abs(f.cell.x - s.head().x) + std::abs(f.cell.y - s.head().y));
  }
  return s.foods.empty() ? 0 : best;
}

PlanValue leaf_value(const SnakeState& leaf, const SnakeState& root, int steps_alive, int depth) {
  PlanValue v;
  v.eaten = leaf.eaten - root.eaten;
  v.survived = leaf.alive ? depth : steps_alive;
  v.neg_distance = leaf.alive ? -nearest_food(leaf) : -kDeadDistance;
  return v;
}

PlanValue search(const SnakeState& root, const SnakeState& s, int steps, int depth) {
  if (steps == depth || s.done) return leaf_value(s, root, steps, depth);
  PlanValue best{std::numeric_limits<int>::min(), 0, 0};
  for (Action a : kDirections) {
    if (a == opposite(s.heading)) continue;
    const Transition t = step(s, a);
    best = std::max(best, search(root, t.state, t.state.alive ? steps + 1 : steps, depth));
  }
  return best;
}

bool free_space_connected(const SnakeState& s) {
  std::vector<char> seen(static_cast<std::size_t>(s.width * s.height), 0);
  int free_cells = 0;
  Cell start{-1, -1};
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      if (is_obstacle(s, {x, y})) continue;
      ++free_cells;
      if (start.x < 0) start = {x, y};
    }
  }
  if (free_cells == 0) return false;
  std::vector<Cell> queue{start};
  seen[start.y * s.width + start.x] = 1;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    for (Action a : kDirections) {
      const Cell n = neighbor(queue[i], a);
      if (!inside(s, n) || is_obstacle(s, n) || seen[n.y * s.width + n.x]) continue;
      seen[n.y * s.width + n.x] = 1;
      queue.push_back(n);
    }
  }
  return static_cast<int>(queue.size()) == free_cells;
}

Cell cell_from_json(const nlohmann::json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

}  // namespace

Cell neighbor(Cell c, Action dir) {
  switch (dir) {
    case Action::Up: return {c.x, c.y + 1};
    case Action::Down: return {c.x, c.y - 1};
    case Action::Left: return {c.x - 1, c.y};
    case Action::Right: return {c.x + 1, c.y};
    default: return c;
  }
}

Action opposite(Action dir) {
  switch (dir) {
    case Action::Up: return Action::Down;
    case Action::Down: return Action::Up;
    case Action::Left: return Action::Right;
    case Action::Right: return Action::Left;
    default: return dir;
  }
}

bool inside(const SnakeState& s, Cell c) {
  return c.x >= 0 && c.y >= 0 && c.x < s.width && c.y < s.height;
}

bool is_obstacle(const SnakeState& s, Cell c) { return contains(s.obstacles, c); }

Transition step(const SnakeState& state, Action action) {
  if (state.done) throw Error(ErrorCode::SteppedAfterDone, "snake episode already finished");
  if (!in_alphabet(GameId::Snake, action))
    throw Error(ErrorCode::Config, "action " + std::string(action_symbol(action)) + " not valid in snake");

  Transition out{state, 0, false};
  SnakeState& s = out.state;
  if (action != opposite(state.heading)) s.heading = action;

  const Cell next = neighbor(state.head(), s.heading);
  auto food = std::find_if(s.foods.begin(), s.foods.end(), [&](const Food& f) { return f.cell == next; });
  const bool eating = food != s.foods.end();

  // The tail vacates its cell this turn unless the snake grows.
  const auto body_end = eating ? s.body.end() : s.body.end() - 1;
  const bool hit_body = std::find(s.body.begin(), body_end, next) != body_end;

  s.turn += 1;
  if (!inside(s, next) || is_obstacle(s, next) || hit_body) {
    s.alive = false;
    s.done = true;
    out.reward = -1;
  } else {
    s.body.insert(s.body.begin(), next);
    if (eating) {
      s.foods.erase(food);
      s.eaten += 1;
      out.reward = 1;
    } else {
      s.body.pop_back();
    }
    std::erase_if(s.foods, [&](const Food& f) { return f.expires_at <= s.turn; });
    spawn_foods(s);
    if (s.turn >= s.step_limit) s.done = true;
  }
  s.total_reward += out.reward;
  out.done = s.done;
  return out;
}

Action default_action(const SnakeState& state) { return state.heading; }

PlanValue evaluate_plan(const SnakeState& state, const std::vector<Action>& plan) {
  SnakeState s = state;
  int alive_steps = 0;
  for (Action a : plan) {
    if (s.done) break;
    s = step(s, a).state;
    if (s.alive) ++alive_steps;
  }
  return leaf_value(s, state, alive_steps, static_cast<int>(plan.size()));
}

Action greedy_oracle(const SnakeState& state, int depth) {
  if (state.done || depth <= 0) return state.heading;
  std::optional<PlanValue> best;
  Action choice = state.heading;
  for (Action a : kDirections) {
    if (a == opposite(state.heading)) continue;
    const Transition t = step(state, a);
    const PlanValue v = search(state, t.state, t.state.alive ? 1 : 0, depth);
    if (!best || v > *best) {
      best = v;
      choice = a;
    }
  }
  if (best->survived == 0) return state.heading;
  return choice;
}

SnakeState generate_layout(const EnvConfig& config, int attempt, int obstacle_count) {
  const SnakeParams& p = config.snake;
  CounterRng rng(config.seed, "snake.layout", static_cast<std::uint64_t>(attempt));
  SnakeState s;
  s.width = p.width;
  s.height = p.height;
  s.step_limit = config.step_limit;
  s.food_count = p.food_count;
  s.food_lifetime = p.food_lifetime;
  s.initial_length = p.initial_length;
  s.heading = Action::Right;
  const Cell head{p.initial_length - 1, p.height / 2};
  for (int i = 0; i < p.initial_length; ++i) s.body.push_back({head.x - i, head.y});

  std::vector<Cell> candidates;
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      const Cell c{x, y};
      const bool ahead = y == head.y && x > head.x && x <= head.x + 2;
      if (!contains(s.body, c) && !ahead) candidates.push_back(c);
    }
  }
  for (int k = 0; k < obstacle_count && !candidates.empty(); ++k) {
    const auto i = rng.below(candidates.size());
    s.obstacles.push_back(candidates[i]);
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(i));
  }
  std::sort(s.obstacles.begin(), s.obstacles.end());
  s.food_rng = CounterRng(config.seed, "snake.food");
  return s;
}

SnakeState reset(const EnvConfig& config) {
  config.validate();
  const LoadBand band = load_band(GameId::Snake, config.difficulty);
  int n = 0;
  if (config.cognitive_load) {
    n = *config.cognitive_load;
  } else {
    CounterRng load_rng(config.seed, "snake.load");
    n = static_cast<int>(load_rng.between(band.lo, band.hi));
  }
  for (int attempt = 0; attempt < kGenerationAttempts; ++attempt) {
    SnakeState s = generate_layout(config, attempt, n);
    if (static_cast<int>(s.obstacles.size()) != n || !free_space_connected(s)) continue;
    spawn_foods(s);
    return s;
  }
  throw Error(ErrorCode::GenerationExhausted,
              "no connected snake layout after " + std::to_string(kGenerationAttempts) + " attempts");
}

nlohmann::json state_json(const SnakeState& s) {
  auto cells = [](const std::vector<Cell>& v) {
    nlohmann::json out = nlohmann::json::array();
    for (const Cell& c : v) out.push_back({c.x, c.y});
    return out;
  };
  nlohmann::json foods = nlohmann::json::array();
  for (const Food& f : s.foods) foods.push_back({{"cell", {f.cell.x, f.cell.y}}, {"expires_at", f.expires_at}});
  return {
      {"width", s.width},
      {"height", s.height},
      {"body", cells(s.body)},
      {"heading", action_symbol(s.heading)},
      {"obstacles", cells(s.obstacles)},
      {"foods", foods},
      {"turn", s.turn},
      {"eaten", s.eaten},
      {"alive", s.alive},
      {"done", s.done},
      {"total_reward", s.total_reward},
      {"step_limit", s.step_limit},
      {"food_count", s.food_count},
      {"food_lifetime", s.food_lifetime},
      {"initial_length", s.initial_length},
      {"food_rng", s.food_rng},
  };
}

nlohmann::json observation_json(const SnakeState& s) {
  nlohmann::json body = nlohmann::json::array();
  for (const Cell& c : s.body) body.push_back({c.x, c.y});
  nlohmann::json obstacles = nlohmann::json::array();
  for (const Cell& c : s.obstacles) obstacles.push_back({c.x, c.y});
  nlohmann::json foods = nlohmann::json::array();
  for (const Food& f : s.foods)
    foods.push_back({{"position", {f.cell.x, f.cell.y}}, {"life_span", f.expires_at - s.turn}});
  return {
      {"player", {{"head", {s.head().x, s.head().y}}, {"direction", action_symbol(s.heading)}}},
      {"body", body},
      {"foods", foods},
      {"obstacles", obstacles},
      {"turn", s.turn},
      {"size", {s.width, s.height}},
  };
}

SnakeState state_from_json(const nlohmann::json& j) {
  SnakeState s;
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
  for (const auto& c : j.at("body")) s.body.push_back(cell_from_json(c));
  s.heading = parse_action(GameId::Snake, j.at("heading").get<std::string>()).value_or(Action::Right);
  for (const auto& c : j.at("obstacles")) s.obstacles.push_back(cell_from_json(c));
  for (const auto& f : j.at("foods")) s.foods.push_back({cell_from_json(f.at("cell")), f.at("expires_at").get<int>()});
  s.turn = j.at("turn").get<int>();
  s.eaten = j.at("eaten").get<int>();
  s.alive = j.at("alive").get<bool>();
  s.done = j.at("done").get<bool>();
  s.total_reward = j.at("total_reward").get<double>();
  s.step_limit = j.at("step_limit").get<int>();
  s.food_count = j.at("food_count").get<int>();
  s.food_lifetime = j.at("food_lifetime").get<int>();
  s.initial_length = j.at("initial_length").get<int>();
  s.food_rng = j.at("food_rng").get<CounterRng>();
  return s;
}

}  // namespace rtgym::snake
