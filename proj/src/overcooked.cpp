#include "rtgym/overcooked.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <optional>

#include <nlohmann/json.hpp>

#include "rtgym/error.hpp"

namespace rtgym::overcooked {

namespace {

constexpr std::array kDirections{Action::Up, Action::Down, Action::Left, Action::Right};
constexpr int kWidth = 7;
constexpr int kUnreached = std::numeric_limits<int>::max();

struct ActResult {
  bool progress = false;
  bool delivered_onion = false;
  double reward = 0;
};

bool is_floor(const KitchenState& s, Cell c) { return s.tile(c) == kFloor; }

std::optional<Action> direction_to(Cell from, Cell to) {
  for (Action a : kDirections)
    if (neighbor(from, a) == to) return a;
  return std::nullopt;
}

Pot* pot_at(KitchenState& s, Cell c) {
  for (Pot& p : s.pots)
    if (p.cell == c) return &p;
  return nullptr;
}

void set_counter_item(KitchenState& s, Cell c, Item item) {
  std::erase_if(s.counter_items, [&](const CounterItem& ci) { return ci.cell == c; });
  if (item != Item::None) {
    s.counter_items.push_back({c, item});
    std::sort(s.counter_items.begin(), s.counter_items.end(),
              [](const CounterItem& a, const CounterItem& b) { return a.cell < b.cell; });
  }
}

ActResult act(KitchenState& s, Pose& pose, Item& held, const Pose& other, Action action) {
  ActResult r;
  if (action == Action::Idle || action == Action::Stay) return r;
  if (action != Action::Interact) {
    const Action old_facing = pose.facing;
    pose.facing = action;
    const Cell target = neighbor(pose.cell, action);
    if (is_floor(s, target) && target != other.cell) {
      pose.cell = target;
      r.progress = true;
    } else {
      r.progress = old_facing != action;
    }
    return r;
  }

  const Cell faced = faced_cell(pose);
  switch (s.tile(faced)) {
    case kOnions:
      if (held == Item::None) {
        held = Item::Onion;
        r.progress = true;
      }
      break;
    case kDishes:
      if (held == Item::None) {
        held = Item::Dish;
        r.reward += kDishReward;
        s.dish_pickups += 1;
        r.progress = true;
      }
      break;
    case kPot: {
      Pot* pot = pot_at(s, faced);
      if (!pot) break;
      if (held == Item::Onion && pot->onions < 3) {
        pot->onions += 1;
        if (pot->onions == 3) pot->ticks = s.cook_time;
        held = Item::None;
        r.progress = r.delivered_onion = true;
      } else if (held == Item::Dish && pot->ready()) {
        held = Item::Soup;
        *pot = Pot{pot->cell, 0, 0};
        r.reward += kSoupReward;
        s.soup_pickups += 1;
        r.progress = true;
      }
      break;
    }
    case kServe:
      if (held == Item::Soup) {
        held = Item::None;
        r.reward += kServeReward;
        s.serves += 1;
        r.progress = true;
      }
      break;
    case kCounter: {
      const Item there = counter_item(s, faced);
      if (held != Item::None && there == Item::None) {
        r.delivered_onion = held == Item::Onion;
        set_counter_item(s, faced, held);
        held = Item::None;
        r.progress = true;
      } else if (held == Item::None && there != Item::None) {
        held = there;
        set_counter_item(s, faced, Item::None);
        r.progress = true;
      }
      break;
    }
    default:
      break;
  }
  return r;
}

// Breadth-first distances over floor cells to any cell adjacent to `target`.
std::vector<int> distance_field(const KitchenState& s, Cell target, std::optional<Cell> blocked) {
  const int w = s.width(), h = s.height();
  std::vector<int> dist(static_cast<std::size_t>(w * h), kUnreached);
  std::vector<Cell> queue;
  for (Action a : kDirections) {
    const Cell c = neighbor(target, a);
    if (is_floor(s, c) && c != blocked) {
      dist[c.y * w + c.x] = 0;
      queue.push_back(c);
    }
  }
  for (std::size_t i = 0; i < queue.size(); ++i) {
    const Cell c = queue[i];
    for (Action a : kDirections) {
      const Cell n = neighbor(c, a);
      if (!is_floor(s, n) || n == blocked || dist[n.y * w + n.x] != kUnreached) continue;
      dist[n.y * w + n.x] = dist[c.y * w + c.x] + 1;
      queue.push_back(n);
    }
  }
  return dist;
}

struct Route {
  Action action = Action::Idle;
  int distance = kUnreached;  // moves until adjacent to the target
};

Route route_to(const KitchenState& s, const Pose& pose, Cell target, std::optional<Cell> blocked) {
  if (auto dir = direction_to(pose.cell, target)) {
    return {pose.facing == *dir ? Action::Interact : *dir, 0};
  }
  const int w = s.width();
  const auto field = distance_field(s, target, blocked);
  const int here = field[pose.cell.y * w + pose.cell.x];
  if (here == kUnreached) return {};
  for (Action a : kDirections) {
    const Cell n = neighbor(pose.cell, a);
    if (is_floor(s, n) && n != blocked && field[n.y * w + n.x] == here - 1) return {a, here};
  }
  return {};
}

// Step onto the free neighbor farthest from `other`, to let it pass.
Action make_way(const KitchenState& s, const Pose& me, Cell other) {
  Action best = Action::Idle;
  int best_d = -1;
  for (Action a : kDirections) {
    const Cell n = neighbor(me.cell, a);
    if (!is_floor(s, n) || n == other) continue;
    const int d = std::abs(n.x - other.x) + std::abs(n.y - other.y);
    if (d > best_d) {
      best = a;
      best_d = d;
    }
  }
  return best;
}

Cell tile_position(const KitchenState& s, char glyph) {
  for (int y = 0; y < s.height(); ++y)
    for (int x = 0; x < s.width(); ++x)
      if (s.grid[y][x] == glyph) return {x, y};
  return {-1, -1};
}

void draw_goal(KitchenState& s) {
  PartnerPolicy& p = s.partner_policy;
  const auto options = s.pots.size() + s.counter_slots.size();
  const auto pick = static_cast<int>(p.rng.below(options));
  if (pick < static_cast<int>(s.pots.size())) {
    p.kind = GoalKind::Pot;
    p.target = pick;
  } else {
    p.kind = GoalKind::Counter;
    p.target = pick - static_cast<int>(s.pots.size());
  }
  p.blocked_turns = 0;
  p.redraws += 1;
}

Cell goal_cell(const KitchenState& s) {
  const PartnerPolicy& p = s.partner_policy;
  return p.kind == GoalKind::Pot ? s.pots.at(p.target).cell : s.counter_slots.at(p.target);
}

Item parse_item(const nlohmann::json& j) {
  if (j.is_null()) return Item::None;
  const auto t = j.get<std::string>();
  if (t == "onion") return Item::Onion;
  if (t == "dish") return Item::Dish;
  if (t == "soup") return Item::Soup;
  return Item::None;
}

nlohmann::json item_json(Item item) {
  return item == Item::None ? nlohmann::json() : nlohmann::json(to_string(item));
}

nlohmann::json pose_json(const Pose& p) {
  return {{"position", {p.cell.x, p.cell.y}}, {"orientation", action_symbol(p.facing)}};
}

Pose pose_from_json(const nlohmann::json& j) {
  Pose p;
  p.cell = {j.at("position").at(0).get<int>(), j.at("position").at(1).get<int>()};
  p.facing = parse_action(GameId::Snake, j.at("orientation").get<std::string>()).value_or(Action::Up);
  return p;
}

}  // namespace

char KitchenState::tile(Cell c) const {
  if (c.y < 0 || c.y >= height() || c.x < 0 || c.x >= width()) return kCounter;
  return grid[c.y][c.x];
}

std::string_view to_string(Item item) {
  switch (item) {
    case Item::None: return "none";
    case Item::Onion: return "onion";
    case Item::Dish: return "dish";
    case Item::Soup: return "soup";
  }
  return "?";
}

Cell neighbor(Cell c, Action dir) {
  switch (dir) {
    case Action::Up: return {c.x, c.y - 1};
    case Action::Down: return {c.x, c.y + 1};
    case Action::Left: return {c.x - 1, c.y};
    case Action::Right: return {c.x + 1, c.y};
    default: return c;
  }
}

Cell faced_cell(const Pose& pose) { return neighbor(pose.cell, pose.facing); }

Item counter_item(const KitchenState& s, Cell c) {
  for (const CounterItem& ci : s.counter_items)
    if (ci.cell == c) return ci.item;
  return Item::None;
}

Action partner_tick(const KitchenState& s) {
  Cell target;
  if (s.partner_item == Item::None) {
    target = tile_position(s, kOnions);
  } else if (s.partner_item == Item::Onion) {
    target = goal_cell(s);
  } else {
    return Action::Idle;
  }
  // The partner ignores the agent when planning; bumping into it counts as
  // a blocked turn.
  const Pose& p = s.partner;
  if (auto dir = direction_to(p.cell, target)) return p.facing == *dir ? Action::Interact : *dir;
  const auto field = distance_field(s, target, std::nullopt);
  const int w = s.width();
  const int here = field[p.cell.y * w + p.cell.x];
  if (here == kUnreached) return Action::Idle;
  for (Action a : kDirections) {
    const Cell n = neighbor(p.cell, a);
    if (is_floor(s, n) && field[n.y * w + n.x] == here - 1) return a;
  }
  return Action::Idle;
}

Transition step(const KitchenState& state, Action agent_action) {
  if (state.done) throw Error(ErrorCode::SteppedAfterDone, "overcooked episode already finished");
  if (!in_alphabet(GameId::Overcooked, agent_action))
    throw Error(ErrorCode::Config,
                "action " + std::string(action_symbol(agent_action)) + " not valid in overcooked");

  Transition out{state, 0, false};
  KitchenState& s = out.state;

  out.reward += act(s, s.agent, s.agent_item, s.partner, agent_action).reward;

  const Action partner_action = partner_tick(s);
  const ActResult pr = act(s, s.partner, s.partner_item, s.agent, partner_action);
  out.reward += pr.reward;
  if (pr.delivered_onion) {
    draw_goal(s);
  } else if (!pr.progress) {
    s.partner_policy.blocked_turns += 1;
    if (s.partner_policy.blocked_turns > s.patience) draw_goal(s);
  } else {
    s.partner_policy.blocked_turns = 0;
  }

  for (Pot& pot : s.pots)
    if (pot.cooking()) pot.ticks -= 1;

  s.turn += 1;
  s.total_reward += out.reward;
  if (s.turn >= s.step_limit) s.done = true;
  out.done = s.done;
  return out;
}

Action default_action(const KitchenState&) { return Action::Idle; }

Action scripted_soup_oracle(const KitchenState& s) {
  if (s.done) return Action::Idle;
  const Pose& me = s.agent;
  const Cell partner = s.partner.cell;
  auto route = [&](const Pose& from, Cell target) { return route_to(s, from, target, partner); };
  // Head for the target, or get out of the partner's way when it is in the
  // only gap.
  auto go = [&](Cell target) {
    const Route r = route(me, target);
    return r.distance == kUnreached ? make_way(s, me, partner) : r.action;
  };

  // Nearest pot satisfying pred, preferring pots reachable right now.
  auto pick_pot = [&](auto&& pred) -> const Pot* {
    const Pot* best = nullptr;
    int best_d = 0;
    for (const Pot& p : s.pots) {
      if (!pred(p)) continue;
      const int d = route(me, p.cell).distance;
      if (!best || d < best_d) {
        best = &p;
        best_d = d;
      }
    }
    return best;
  };

  const Cell dishes = tile_position(s, kDishes);
  const Cell onions = tile_position(s, kOnions);
  const Cell serve = tile_position(s, kServe);

  switch (s.agent_item) {
    case Item::Soup:
      return go(serve);
    case Item::Dish: {
      if (const Pot* p = pick_pot([](const Pot& p) { return p.ready(); })) return go(p->cell);
      const Pot* p = pick_pot([](const Pot& p) { return p.cooking(); });
      if (!p) p = pick_pot([](const Pot&) { return true; });
      const Action a = go(p->cell);
      // Wait beside the pot rather than poking an unready soup.
      return a == Action::Interact ? Action::Idle : a;
    }
    case Item::Onion: {
      // Concentrate onions: fullest unfinished pot first, then nearest.
      int most = -1;
      for (const Pot& p : s.pots)
        if (p.onions < 3) most = std::max(most, p.onions);
      if (most < 0) return Action::Idle;
      const Pot* p = pick_pot([&](const Pot& p) { return p.onions == most; });
      return go(p->cell);
    }
    case Item::None:
      break;
  }

  // Empty-handed: fetch a dish when some soup will be ready by the time a
  // dish could reach it, otherwise bring onions to an unfilled pot.
  Pose at_dishes = me;
  for (Action a : kDirections) {
    const Cell c = neighbor(dishes, a);
    if (is_floor(s, c)) at_dishes = {c, Action::Up};
  }
  const long long to_dishes = route_to(s, me, dishes, std::nullopt).distance;
  for (const Pot& p : s.pots) {
    if (p.ready()) return go(dishes);
    if (!p.cooking()) continue;
    const long long travel = to_dishes + 1 + route_to(s, at_dishes, p.cell, std::nullopt).distance + 1;
    if (p.ticks <= travel) return go(dishes);
  }

  const bool fillable = std::any_of(s.pots.begin(), s.pots.end(), [](const Pot& p) { return p.onions < 3; });
  if (!fillable) return go(dishes);

  Cell source = onions;
  int best = route(me, onions).distance;
  for (const CounterItem& ci : s.counter_items) {
    if (ci.item != Item::Onion) continue;
    const int d = route(me, ci.cell).distance;
    if (d < best) {
      best = d;
      source = ci.cell;
    }
  }
  return go(source);
}

KitchenState build_kitchen(const EnvConfig& config, int counter_len) {
  const int h = 5 + counter_len;
  const int mid = h / 2;
  KitchenState s;
  s.counter_len = counter_len;
  s.grid.assign(h, std::string(kWidth, kFloor));
  for (int y = 0; y < h; ++y) s.grid[y][0] = s.grid[y][kWidth - 1] = kCounter;
  s.grid[0] = "#O#P#P#";
  s.grid[h - 1] = "#D#S###";
  for (int x = 1; x <= counter_len; ++x) s.grid[mid][x] = kCounter;

  s.pots = {Pot{{3, 0}}, Pot{{5, 0}}};
  for (int x = 1; x <= counter_len; ++x) s.counter_slots.push_back({x, mid});
  if (counter_len == 0) s.counter_slots.push_back({0, mid});
  s.counter_slots.push_back({kWidth - 1, mid});

  s.agent = {{1, h - 2}, Action::Up};
  s.partner = {{5, 1}, Action::Up};
  s.step_limit = config.step_limit;
  s.cook_time = config.overcooked.cook_time;
  s.patience = config.overcooked.partner_patience;
  s.partner_policy.rng = CounterRng(config.seed, "overcooked.partner");
  s.partner_policy.redraws = -1;
  draw_goal(s);
  return s;
}

KitchenState reset(const EnvConfig& config) {
  config.validate();
  const LoadBand band = load_band(GameId::Overcooked, config.difficulty);
  int len = band.lo;
  if (config.cognitive_load) {
    len = *config.cognitive_load;
  } else if (band.hi > band.lo) {
    CounterRng load_rng(config.seed, "overcooked.load");
    len = static_cast<int>(load_rng.between(band.lo, band.hi));
  }
  if (len < 0 || len > kWidth - 3) throw Error(ErrorCode::Config, "counter length does not fit the kitchen");
  return build_kitchen(config, len);
}

nlohmann::json state_json(const KitchenState& s) {
  nlohmann::json pots = nlohmann::json::array();
  for (const Pot& p : s.pots) pots.push_back({{"cell", {p.cell.x, p.cell.y}}, {"onions", p.onions}, {"ticks", p.ticks}});
  nlohmann::json slots = nlohmann::json::array();
  for (const Cell& c : s.counter_slots) slots.push_back({c.x, c.y});
  nlohmann::json items = nlohmann::json::array();
  for (const CounterItem& ci : s.counter_items) items.push_back({{"cell", {ci.cell.x, ci.cell.y}}, {"item", to_string(ci.item)}});
  const PartnerPolicy& pp = s.partner_policy;
  return {
      {"grid", s.grid},
      {"counter_len", s.counter_len},
      {"pots", pots},
      {"counter_slots", slots},
      {"counter_items", items},
      {"agent", pose_json(s.agent)},
      {"partner", pose_json(s.partner)},
      {"agent_item", item_json(s.agent_item)},
      {"partner_item", item_json(s.partner_item)},
      {"partner_policy",
       {{"kind", pp.kind == GoalKind::Pot ? "pot" : "counter"},
        {"target", pp.target},
        {"blocked_turns", pp.blocked_turns},
        {"redraws", pp.redraws},
        {"rng", pp.rng}}},
      {"turn", s.turn},
      {"step_limit", s.step_limit},
      {"cook_time", s.cook_time},
      {"patience", s.patience},
      {"total_reward", s.total_reward},
      {"done", s.done},
      {"events", {{"dish_pickups", s.dish_pickups}, {"soup_pickups", s.soup_pickups}, {"serves", s.serves}}},
  };
}

nlohmann::json observation_json(const KitchenState& s) {
  nlohmann::json objects = nlohmann::json::array();
  for (const Pot& p : s.pots) {
    objects.push_back({{"name", "soup"},
                       {"position", {p.cell.x, p.cell.y}},
                       {"onions", p.onions},
                       {"is_ready", p.ready()},
                       {"is_cooking", p.cooking()},
                       {"remaining_cooking_tick", p.ticks}});
  }
  for (const CounterItem& ci : s.counter_items)
    objects.push_back({{"name", to_string(ci.item)}, {"position", {ci.cell.x, ci.cell.y}}});
  auto player = [](const Pose& p, Item held) {
    nlohmann::json j = pose_json(p);
    j["held_object"] = item_json(held);
    return j;
  };
  return {
      {"turn", s.turn},
      {"agent", player(s.agent, s.agent_item)},
      {"partner", player(s.partner, s.partner_item)},
      {"objects", objects},
      {"layout", s.grid},
  };
}

KitchenState state_from_json(const nlohmann::json& j) {
  KitchenState s;
  s.grid = j.at("grid").get<std::vector<std::string>>();
  s.counter_len = j.at("counter_len").get<int>();
  for (const auto& p : j.at("pots"))
    s.pots.push_back({{p.at("cell").at(0).get<int>(), p.at("cell").at(1).get<int>()},
                      p.at("onions").get<int>(),
                      p.at("ticks").get<int>()});
  for (const auto& c : j.at("counter_slots")) s.counter_slots.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
  for (const auto& ci : j.at("counter_items"))
    s.counter_items.push_back({{ci.at("cell").at(0).get<int>(), ci.at("cell").at(1).get<int>()},
                               parse_item(ci.at("item"))});
  s.agent = pose_from_json(j.at("agent"));
  s.partner = pose_from_json(j.at("partner"));
  s.agent_item = parse_item(j.at("agent_item"));
  s.partner_item = parse_item(j.at("partner_item"));
  const auto& pp = j.at("partner_policy");
  s.partner_policy.kind = pp.at("kind").get<std::string>() == "pot" ? GoalKind::Pot : GoalKind::Counter;
  s.partner_policy.target = pp.at("target").get<int>();
  s.partner_policy.blocked_turns = pp.at("blocked_turns").get<int>();
  s.partner_policy.redraws = pp.at("redraws").get<int>();
  s.partner_policy.rng = pp.at("rng").get<CounterRng>();
  s.turn = j.at("turn").get<int>();
  s.step_limit = j.at("step_limit").get<int>();
  s.cook_time = j.at("cook_time").get<int>();
  s.patience = j.at("patience").get<int>();
  s.total_reward = j.at("total_reward").get<double>();
  s.done = j.at("done").get<bool>();
  const auto& ev = j.at("events");
  s.dish_pickups = ev.at("dish_pickups").get<int>();
  s.soup_pickups = ev.at("soup_pickups").get<int>();
  s.serves = ev.at("serves").get<int>();
  return s;
}

}  // namespace rtgym::overcooked
