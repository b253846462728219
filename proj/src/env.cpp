#include "rtgym/env.hpp"

#include <cstdio>

#include "rtgym/freeway.hpp"
#include "rtgym/overcooked.hpp"
#include "rtgym/rng.hpp"
#include "rtgym/snake.hpp"

namespace rtgym {

namespace {

struct FreewayOps {
  using State = freeway::FreewayState;
  static State reset(const EnvConfig& c) { return freeway::reset(c); }
  static auto step(const State& s, Action a) { return freeway::step(s, a); }
  static Action fallback(const State& s) { return freeway::default_action(s); }
  static int load(const State& s) { return s.min_steps; }
  static nlohmann::json state(const State& s) { return freeway::state_json(s); }
  static nlohmann::json observe(const State& s) { return freeway::observation_json(s); }
};

struct SnakeOps {
  using State = snake::SnakeState;
  static State reset(const EnvConfig& c) { return snake::reset(c); }
  static auto step(const State& s, Action a) { return snake::step(s, a); }
  static Action fallback(const State& s) { return snake::default_action(s); }
  static int load(const State& s) { return static_cast<int>(s.obstacles.size()); }
  static nlohmann::json state(const State& s) { return snake::state_json(s); }
  static nlohmann::json observe(const State& s) { return snake::observation_json(s); }
};

struct OvercookedOps {
  using State = overcooked::KitchenState;
  static State reset(const EnvConfig& c) { return overcooked::reset(c); }
  static auto step(const State& s, Action a) { return overcooked::step(s, a); }
  static Action fallback(const State& s) { return overcooked::default_action(s); }
  static int load(const State& s) { return s.counter_len; }
  static nlohmann::json state(const State& s) { return overcooked::state_json(s); }
  static nlohmann::json observe(const State& s) { return overcooked::observation_json(s); }
};

template <class Ops>
class GameEnvironment final : public Environment {
 public:
  explicit GameEnvironment(const EnvConfig& config) : config_(config), state_(Ops::reset(config)) {}

  const EnvConfig& config() const override { return config_; }
  std::unique_ptr<Environment> clone() const override { return std::make_unique<GameEnvironment>(*this); }

  StepOutcome step(Action action) override {
    auto t = Ops::step(state_, action);
    state_ = std::move(t.state);
    state_view_.reset();
    observation_view_.reset();
    digest_.reset();
    return {t.reward, t.done};
  }

  Action default_action() const override { return Ops::fallback(state_); }
  bool done() const override { return state_.done; }
  int turn() const override { return state_.turn; }
  double total_reward() const override { return state_.total_reward; }
  int cognitive_load() const override { return Ops::load(state_); }
  const nlohmann::json& state_json() const override {
    if (!state_view_) state_view_ = Ops::state(state_);
    return *state_view_;
  }
  const nlohmann::json& observation_json() const override {
    if (!observation_view_) observation_view_ = Ops::observe(state_);
    return *observation_view_;
  }
  const std::string& digest() const override {
    if (!digest_) digest_ = state_digest(state_json());
    return *digest_;
  }

 private:
  EnvConfig config_;
  typename Ops::State state_;
  mutable std::optional<nlohmann::json> state_view_;
  mutable std::optional<nlohmann::json> observation_view_;
  mutable std::optional<std::string> digest_;
};

}  // namespace

std::string state_digest(const nlohmann::json& state) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(state.dump())));
  return buf;
}

std::unique_ptr<Environment> make_environment(const EnvConfig& config) {
  switch (config.game) {
    case GameId::Freeway: return std::make_unique<GameEnvironment<FreewayOps>>(config);
    case GameId::Snake: return std::make_unique<GameEnvironment<SnakeOps>>(config);
    case GameId::Overcooked: return std::make_unique<GameEnvironment<OvercookedOps>>(config);
  }
  return nullptr;
}

}  // namespace rtgym
