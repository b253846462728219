#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

namespace rtgym {

enum class GameId : std::uint8_t { Freeway, Snake, Overcooked };
enum class Difficulty : std::uint8_t { Easy, Medium, Hard };

// One tag set shared by all games; each game accepts its own subset.
enum class Action : std::uint8_t { Up, Down, Left, Right, Stay, Interact, Idle };

std::string_view to_string(GameId game);
std::string_view to_string(Difficulty difficulty);
GameId parse_game(std::string_view text);              // throws Config
Difficulty parse_difficulty(std::string_view text);    // throws Config

std::span<const Action> action_alphabet(GameId game);
bool in_alphabet(GameId game, Action action);

// Single-letter symbol used in logs and plan text (U D L R S I; Overcooked
// idle shares "S" with Freeway's stay).
std::string_view action_symbol(Action action);

// Accepts the game's letters and full words ("up", "stay", "interact", ...),
// case-insensitive. Anything outside the game's alphabet is rejected.
std::optional<Action> parse_action(GameId game, std::string_view text);

struct LoadBand {
  int lo;
  int hi;
  bool contains(int v) const noexcept { return v >= lo && v <= hi; }
};

// Cognitive-load bands: Freeway min crossing steps S, Snake obstacle count N,
// Overcooked central counter length L.
LoadBand load_band(GameId game, Difficulty difficulty);

struct RewardRange {
  double min;
  double max;
};

RewardRange reward_range(GameId game);

// Linear map of raw reward onto [0, 1], clamped.
double normalize_score(GameId game, double raw_reward);

struct FreewayParams {
  int ring = 96;  // circumference of the car ring, cells
};

struct SnakeParams {
  int width = 10;
  int height = 10;
  int initial_length = 3;
  int food_count = 3;
  int food_lifetime = 15;
};

struct OvercookedParams {
  int cook_time = 20;
  int partner_patience = 5;  // blocked turns tolerated before the partner re-draws its goal
};

struct EnvConfig {
  GameId game = GameId::Freeway;
  std::uint64_t seed = 0;
  Difficulty difficulty = Difficulty::Medium;
  std::optional<int> cognitive_load;  // exact value requested inside the band
  int step_limit = 100;
  FreewayParams freeway;
  SnakeParams snake;
  OvercookedParams overcooked;

  void validate() const;  // throws Config
};

void to_json(nlohmann::json& j, const EnvConfig& c);
void from_json(const nlohmann::json& j, EnvConfig& c);

inline constexpr int kGenerationAttempts = 10000;

}  // namespace rtgym
