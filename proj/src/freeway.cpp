#include "rtgym/freeway.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include <nlohmann/json.hpp>

#include "rtgym/error.hpp"
#include "rtgym/rng.hpp"

namespace rtgym::freeway {

namespace {

int floor_mod(long long a, int m) {
  const long long r = a % m;
  return static_cast<int>(r < 0 ? r + m : r);
}

constexpr std::array kSpeeds{3, 4, 6, 12, 24, 48};
constexpr std::array kSpanLens{11, 23, 47};

std::string_view direction_name(CarDirection d) {
  return d == CarDirection::Right ? "right" : "left";
}

CarDirection parse_direction(const std::string& s) {
  if (s == "right") return CarDirection::Right;
  if (s == "left") return CarDirection::Left;
  throw Error(ErrorCode::SchemaMismatch, "bad car direction '" + s + "'");
}

}  // namespace

Span car_span_at(const Car& car, int dt) {
  const int shift = car.speed * dt;
  if (car.direction == CarDirection::Right) return {car.tail() + shift, car.head + shift};
  return {car.head - shift, car.tail() - shift};
}

int wrap(int x, int ring) {
  const int half = ring / 2;
  return half - floor_mod(static_cast<long long>(half) - x, ring);
}

Span normalize_span(Span span, int ring) {
  const int lo = wrap(span.lo, ring);
  return {lo, lo + (span.hi - span.lo)};
}

bool span_contains_zero(Span span, int ring) {
  // Offset of x = 0 from the span start, walking in the positive direction.
  return floor_mod(-static_cast<long long>(span.lo), ring) <= span.hi - span.lo;
}

Car advance_car(const Car& car, int dt, int ring) {
  Car out = car;
  const long long shift = static_cast<long long>(car.speed) * dt;
  const long long head = car.direction == CarDirection::Right ? car.head + shift : car.head - shift;
  out.head = wrap(static_cast<int>(floor_mod(head, ring)), ring);
  return out;
}

bool collides(const FreewayState& state, int lane) {
  if (lane < 1 || lane > 8) return false;
  return std::any_of(state.cars.begin(), state.cars.end(), [&](const Car& c) {
    return c.lane == lane && span_contains_zero(car_span_at(c, 0), state.ring);
  });
}

Transition step(const FreewayState& state, Action action) {
  if (state.done) throw Error(ErrorCode::SteppedAfterDone, "freeway episode already finished");
  if (!in_alphabet(GameId::Freeway, action))
    throw Error(ErrorCode::Config, "action " + std::string(action_symbol(action)) + " not valid in freeway");

  Transition out{state, 0, false};
  FreewayState& s = out.state;

  // Only the departure lane matters: the player is not on the target lane
  // until the next turn.
  if (collides(state, state.player_y)) {
    s.player_y = 0;
  } else {
    const int dy = action == Action::Up ? 1 : action == Action::Down ? -1 : 0;
    s.player_y = std::clamp(state.player_y + dy, 0, kGoalLane);
  }
  s.last_action = action;
  for (Car& c : s.cars) c = advance_car(c, 1, s.ring);
  s.turn += 1;
  s.steps_taken = s.turn;

  if (s.player_y == kGoalLane) {
    out.reward = s.step_limit - s.steps_taken;
    s.done = true;
  } else if (s.turn >= s.step_limit) {
    s.done = true;
  }
  s.total_reward += out.reward;
  out.done = s.done;
  return out;
}

Action default_action(const FreewayState& state) {
  return state.last_action.value_or(Action::Stay);
}

int traffic_period(const FreewayState& state) {
  int period = 1;
  for (const Car& c : state.cars) period = std::lcm(period, state.ring / std::gcd(state.ring, c.speed));
  return period;
}

std::optional<std::vector<Action>> shortest_path(const FreewayState& state) {
  if (state.done) return std::nullopt;
  const int horizon = state.step_limit - state.turn;
  const int period = traffic_period(state);

  // blocked[phase * 10 + lane]
  std::vector<char> blocked(static_cast<std::size_t>(period) * 10, 0);
  for (int p = 0; p < period; ++p) {
    for (const Car& c : state.cars) {
      if (span_contains_zero(car_span_at(c, p), state.ring)) blocked[p * 10 + c.lane] = 1;
    }
  }
  auto is_blocked = [&](int dt, int lane) { return blocked[(dt % period) * 10 + lane] != 0; };

  struct Node {
    int dt;
    int y;
    int parent;
    Action via;
  };
  std::vector<Node> nodes;
  std::vector<char> seen(static_cast<std::size_t>(period) * 10, 0);

  std::vector<Action> prefix;
  int dt0 = 0, y0 = state.player_y;
  if (is_blocked(0, y0)) {
    // Already hit this turn: whatever is played, the player restarts.
    prefix.push_back(Action::Stay);
    dt0 = 1;
    y0 = 0;
    if (dt0 > horizon) return std::nullopt;
  }
  nodes.push_back({dt0, y0, -1, Action::Stay});
  seen[(dt0 % period) * 10 + y0] = 1;

  auto unwind = [&](int idx, Action last) {
    std::vector<Action> path;
    path.push_back(last);
    for (int i = idx; nodes[i].parent >= 0; i = nodes[i].parent) path.push_back(nodes[i].via);
    path.insert(path.end(), prefix.rbegin(), prefix.rend());
    std::reverse(path.begin(), path.end());
    return path;
  };

  constexpr std::array kOrder{Action::Up, Action::Stay, Action::Down};
  for (std::size_t head = 0; head < nodes.size(); ++head) {
    const Node n = nodes[head];
    if (n.dt + 1 > horizon) continue;
    for (Action a : kOrder) {
      const int dy = a == Action::Up ? 1 : a == Action::Down ? -1 : 0;
      const int y = std::clamp(n.y + dy, 0, kGoalLane);
      if (y == kGoalLane) return unwind(static_cast<int>(head), a);
      if (is_blocked(n.dt + 1, y)) continue;
      char& mark = seen[((n.dt + 1) % period) * 10 + y];
      if (mark) continue;
      mark = 1;
      nodes.push_back({n.dt + 1, y, static_cast<int>(head), a});
    }
  }
  return std::nullopt;
}

int min_steps_oracle(const FreewayState& state) {
  const auto path = shortest_path(state);
  if (!path) throw Error(ErrorCode::Unreachable, "goal lane cannot be reached safely within the step limit");
  return static_cast<int>(path->size());
}

FreewayState generate_layout(const EnvConfig& config, int attempt) {
  CounterRng rng(config.seed, "freeway.layout", static_cast<std::uint64_t>(attempt));
  FreewayState s;
  s.step_limit = config.step_limit;
  s.ring = config.freeway.ring;
  const int half = s.ring / 2;
  for (int lane = 1; lane <= 8; ++lane) {
    const auto dir = rng.below(2) == 0 ? CarDirection::Right : CarDirection::Left;
    const int speed = kSpeeds[rng.below(kSpeeds.size())];
    const int span_len = std::min(kSpanLens[rng.below(kSpanLens.size())], s.ring - 2);
    const int count = static_cast<int>(rng.between(1, 3));
    for (int k = 0; k < count; ++k) {
      const int head = static_cast<int>(rng.between(-half + 1, half));
      s.cars.push_back({lane, head, span_len, dir, speed});
    }
  }
  return s;
}

FreewayState reset(const EnvConfig& config) {
  config.validate();
  const LoadBand band = load_band(GameId::Freeway, config.difficulty);
  for (int attempt = 0; attempt < kGenerationAttempts; ++attempt) {
    FreewayState s = generate_layout(config, attempt);
    const auto path = shortest_path(s);
    if (!path) continue;
    const int S = static_cast<int>(path->size());
    const bool ok = config.cognitive_load ? S == *config.cognitive_load : band.contains(S);
    if (!ok) continue;
    s.min_steps = S;
    return s;
  }
  throw Error(ErrorCode::GenerationExhausted,
              "no freeway layout in band after " + std::to_string(kGenerationAttempts) + " attempts");
}

nlohmann::json state_json(const FreewayState& s) {
  nlohmann::json cars = nlohmann::json::array();
  for (const Car& c : s.cars)
    cars.push_back({c.lane, c.head, c.tail(), direction_name(c.direction), c.speed});
  return {
      {"player_y", s.player_y},
      {"turn", s.turn},
      {"cars", cars},
      {"last_action", s.last_action ? nlohmann::json(action_symbol(*s.last_action)) : nlohmann::json()},
      {"steps_taken", s.steps_taken},
      {"step_limit", s.step_limit},
      {"ring", s.ring},
      {"min_steps", s.min_steps},
      {"done", s.done},
      {"total_reward", s.total_reward},
  };
}

nlohmann::json observation_json(const FreewayState& s) {
  nlohmann::json cars = nlohmann::json::array();
  for (const Car& c : s.cars)
    cars.push_back({c.lane, c.head, direction_name(c.direction), c.speed, c.span_len});
  return {{"player_states", s.player_y}, {"car_states", cars}, {"turn", s.turn}, {"ring", s.ring}};
}

FreewayState state_from_json(const nlohmann::json& j) {
  FreewayState s;
  s.player_y = j.at("player_y").get<int>();
  s.turn = j.at("turn").get<int>();
  for (const auto& row : j.at("cars")) {
    Car c;
    c.lane = row.at(0).get<int>();
    c.head = row.at(1).get<int>();
    const int tail = row.at(2).get<int>();
    c.direction = parse_direction(row.at(3).get<std::string>());
    c.speed = row.at(4).get<int>();
    c.span_len = std::abs(c.head - tail);
    s.cars.push_back(c);
  }
  if (!j.at("last_action").is_null()) {
    s.last_action = parse_action(GameId::Freeway, j.at("last_action").get<std::string>());
  }
  s.steps_taken = j.at("steps_taken").get<int>();
  s.step_limit = j.at("step_limit").get<int>();
  s.ring = j.at("ring").get<int>();
  s.min_steps = j.at("min_steps").get<int>();
  s.done = j.at("done").get<bool>();
  s.total_reward = j.at("total_reward").get<double>();
  return s;
}

}  // namespace rtgym::freeway
