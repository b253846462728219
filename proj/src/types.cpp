#include "rtgym/types.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include <nlohmann/json.hpp>

#include "rtgym/error.hpp"

namespace rtgym {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::GenerationExhausted: return "GenerationExhausted";
    case ErrorCode::SteppedAfterDone: return "SteppedAfterDone";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::ReasonerFailure: return "ReasonerFailure";
    case ErrorCode::PolicyCrash: return "PolicyCrash";
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::Divergence: return "Divergence";
    case ErrorCode::IncompleteRun: return "IncompleteRun";
    case ErrorCode::Io: return "IoError";
  }
  return "Error";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

constexpr std::array kFreewayActions{Action::Up, Action::Down, Action::Stay};
constexpr std::array kSnakeActions{Action::Up, Action::Down, Action::Left, Action::Right};
constexpr std::array kOvercookedActions{Action::Up,    Action::Down,     Action::Left,
                                        Action::Right, Action::Interact, Action::Idle};

}  // namespace

std::string_view to_string(GameId game) {
  switch (game) {
    case GameId::Freeway: return "freeway";
    case GameId::Snake: return "snake";
    case GameId::Overcooked: return "overcooked";
  }
  return "?";
}

std::string_view to_string(Difficulty difficulty) {
  switch (difficulty) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Medium: return "medium";
    case Difficulty::Hard: return "hard";
  }
  return "?";
}

GameId parse_game(std::string_view text) {
  const std::string t = lower(text);
  if (t == "freeway") return GameId::Freeway;
  if (t == "snake") return GameId::Snake;
  if (t == "overcooked") return GameId::Overcooked;
  throw Error(ErrorCode::Config, "unknown game '" + std::string(text) + "'");
}

Difficulty parse_difficulty(std::string_view text) {
  const std::string t = lower(text);
  if (t == "easy") return Difficulty::Easy;
  if (t == "medium") return Difficulty::Medium;
  if (t == "hard") return Difficulty::Hard;
  throw Error(ErrorCode::Config, "unknown difficulty '" + std::string(text) + "'");
}

std::span<const Action> action_alphabet(GameId game) {
  switch (game) {
    case GameId::Freeway: return kFreewayActions;
    case GameId::Snake: return kSnakeActions;
    case GameId::Overcooked: return kOvercookedActions;
  }
  return {};
}

bool in_alphabet(GameId game, Action action) {
  const auto alphabet = action_alphabet(game);
  return std::find(alphabet.begin(), alphabet.end(), action) != alphabet.end();
}

std::string_view action_symbol(Action action) {
  switch (action) {
    case Action::Up: return "U";
    case Action::Down: return "D";
    case Action::Left: return "L";
    case Action::Right: return "R";
    case Action::Stay: return "S";
    case Action::Interact: return "I";
    case Action::Idle: return "S";
  }
  return "?";
}

std::optional<Action> parse_action(GameId game, std::string_view text) {
  const std::string t = lower(text);
  std::optional<Action> a;
  if (t == "u" || t == "up") a = Action::Up;
  else if (t == "d" || t == "down") a = Action::Down;
  else if (t == "l" || t == "left") a = Action::Left;
  else if (t == "r" || t == "right") a = Action::Right;
  else if (t == "i" || t == "interact") a = Action::Interact;
  else if (t == "s" || t == "stay" || t == "idle" || t == "noop")
    a = game == GameId::Overcooked ? Action::Idle : Action::Stay;
  if (a && in_alphabet(game, *a)) return a;
  return std::nullopt;
}

LoadBand load_band(GameId game, Difficulty difficulty) {
  switch (game) {
    case GameId::Freeway:
      switch (difficulty) {
        case Difficulty::Easy: return {9, 12};
        case Difficulty::Medium: return {13, 16};
        case Difficulty::Hard: return {17, 21};
      }
      break;
    case GameId::Snake:
      switch (difficulty) {
        case Difficulty::Easy: return {1, 1};
        case Difficulty::Medium: return {2, 5};
        case Difficulty::Hard: return {6, 8};
      }
      break;
    case GameId::Overcooked:
      switch (difficulty) {
        case Difficulty::Easy: return {0, 0};
        case Difficulty::Medium: return {3, 3};
        case Difficulty::Hard: return {4, 4};
      }
      break;
  }
  return {0, 0};
}

RewardRange reward_range(GameId game) {
  switch (game) {
    case GameId::Freeway: return {0, 89};
    case GameId::Snake: return {-1, 15};
    case GameId::Overcooked: return {0, 56};
  }
  return {0, 1};
}

double normalize_score(GameId game, double raw_reward) {
  const RewardRange r = reward_range(game);
  return std::clamp((raw_reward - r.min) / (r.max - r.min), 0.0, 1.0);
}

void EnvConfig::validate() const {
  if (step_limit < 1) throw Error(ErrorCode::Config, "step_limit must be positive");
  if (cognitive_load && !load_band(game, difficulty).contains(*cognitive_load)) {
    throw Error(ErrorCode::Config, "cognitive load " + std::to_string(*cognitive_load) +
                                       " outside the " + std::string(to_string(difficulty)) +
                                       " band for " + std::string(to_string(game)));
  }
  if (freeway.ring < 8) throw Error(ErrorCode::Config, "freeway ring must be at least 8 cells");
  if (snake.width < 5 || snake.height < 5)
    throw Error(ErrorCode::Config, "snake grid must be at least 5x5");
  if (snake.initial_length < 1 || snake.initial_length >= snake.width)
    throw Error(ErrorCode::Config, "snake initial length must fit in a row");
  if (snake.food_lifetime < 1 || snake.food_count < 0)
    throw Error(ErrorCode::Config, "snake food parameters must be positive");
  if (overcooked.cook_time < 1 || overcooked.partner_patience < 0)
    throw Error(ErrorCode::Config, "overcooked parameters must be positive");
}

void to_json(nlohmann::json& j, const EnvConfig& c) {
  j = nlohmann::json{
      {"game", to_string(c.game)},
      {"seed", c.seed},
      {"difficulty", to_string(c.difficulty)},
      {"cognitive_load", c.cognitive_load ? nlohmann::json(*c.cognitive_load) : nlohmann::json()},
      {"step_limit", c.step_limit},
      {"freeway", {{"ring", c.freeway.ring}}},
      {"snake",
       {{"width", c.snake.width},
        {"height", c.snake.height},
        {"initial_length", c.snake.initial_length},
        {"food_count", c.snake.food_count},
        {"food_lifetime", c.snake.food_lifetime}}},
      {"overcooked",
       {{"cook_time", c.overcooked.cook_time},
        {"partner_patience", c.overcooked.partner_patience}}},
  };
}

void from_json(const nlohmann::json& j, EnvConfig& c) {
  c = EnvConfig{};
  c.game = parse_game(j.at("game").get<std::string>());
  c.seed = j.value("seed", std::uint64_t{0});
  c.difficulty = parse_difficulty(j.value("difficulty", std::string("medium")));
  if (j.contains("cognitive_load") && !j.at("cognitive_load").is_null())
    c.cognitive_load = j.at("cognitive_load").get<int>();
  c.step_limit = j.value("step_limit", 100);
  if (j.contains("freeway")) c.freeway.ring = j.at("freeway").value("ring", c.freeway.ring);
  if (j.contains("snake")) {
    const auto& s = j.at("snake");
    c.snake.width = s.value("width", c.snake.width);
    c.snake.height = s.value("height", c.snake.height);
    c.snake.initial_length = s.value("initial_length", c.snake.initial_length);
    c.snake.food_count = s.value("food_count", c.snake.food_count);
    c.snake.food_lifetime = s.value("food_lifetime", c.snake.food_lifetime);
  }
  if (j.contains("overcooked")) {
    const auto& o = j.at("overcooked");
    c.overcooked.cook_time = o.value("cook_time", c.overcooked.cook_time);
    c.overcooked.partner_patience = o.value("partner_patience", c.overcooked.partner_patience);
  }
}

}  // namespace rtgym
