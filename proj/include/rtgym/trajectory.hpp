#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rtgym/token_clock.hpp"
#include "rtgym/types.hpp"

namespace rtgym {

inline constexpr int kTrajectorySchemaVersion = 1;

enum class ActionSource : std::uint8_t { Agent, Default };

// Per-lane token accounting for one environment step. A lane's busy and
// idle tokens always sum to the tokens that lane was granted in the step.
struct StepTokens {
  TokenCount reactive = 0;
  TokenCount reactive_idle = 0;
  TokenCount planning = 0;
  TokenCount planning_idle = 0;
  std::optional<TokenCount> natural;  // untruncated length of this step's reactive call
  std::optional<TokenCount> trace;    // planning-trace tokens visible at the snapshot
  friend bool operator==(const StepTokens&, const StepTokens&) = default;
};

struct StepRecord {
  int turn = 0;
  std::string pre_digest;
  Action action = Action::Stay;
  ActionSource source = ActionSource::Default;
  TokenCount tokens_charged = 0;  // clock tokens elapsed in this step
  StepTokens tokens;
  double reward_delta = 0;
  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct Trajectory {
  EnvConfig config;
  nlohmann::json agent;  // descriptor of paradigm, budgets, reasoners
  int cognitive_load = 0;
  std::string initial_digest;
  std::string final_digest;
  std::vector<StepRecord> steps;
  double final_reward = 0;
  double score = 0;
  std::vector<nlohmann::json> incidents;  // reasoner failures, policy crashes, timeouts
};

// JSONL: one header line then one line per step. Output is canonical, so
// identical trajectories serialize to identical bytes.
void write_trajectory(std::ostream& out, const Trajectory& t);
std::string serialize_trajectory(const Trajectory& t);
void save_trajectory(const std::filesystem::path& path, const Trajectory& t);

// Throws SchemaMismatch on a version or shape mismatch.
Trajectory read_trajectory(std::istream& in);
Trajectory load_trajectory(const std::filesystem::path& path);

struct ReplayReport {
  std::size_t steps_checked = 0;
  double final_reward = 0;
};

// Re-simulates from the recorded config and actions. Throws DivergenceError
// carrying the index of the first step whose outcome differs from the log.
ReplayReport replay(const Trajectory& t);

std::string_view to_string(ActionSource source);

}  // namespace rtgym
