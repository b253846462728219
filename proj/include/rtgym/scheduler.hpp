#pragma once

#include <functional>
#include <optional>

#include <nlohmann/json.hpp>

#include "rtgym/policy_process.hpp"
#include "rtgym/prompt.hpp"
#include "rtgym/reasoner.hpp"
#include "rtgym/trajectory.hpp"

namespace rtgym {

enum class Paradigm : std::uint8_t { Reactive, Planning, CodePolicy, Agile };
enum class ThroughputMode : std::uint8_t { Parallel, Concurrent };

struct ReplanTrigger {
  enum class Kind : std::uint8_t { OnPlanExhausted, EveryKSteps };
  Kind kind = Kind::OnPlanExhausted;
  int k = 0;
};

struct AgentConfig {
  Paradigm paradigm = Paradigm::Reactive;
  TokenCount step_budget = 8000;            // N_T_E: tokens per environment step
  TokenCount reactive_budget = 8000;        // N_i: reactive paradigm cutoff
  TokenCount agile_reactive_budget = 2000;  // N_T_R: agile reactive window
  ThroughputMode throughput = ThroughputMode::Parallel;
  ReplanTrigger replan;
  // Drop an in-flight plan older than this many steps and restart from the
  // current observation. Off by default: plans are only replaced on completion.
  std::optional<int> abandon_plan_after_steps;

  void validate() const;  // throws Config
  nlohmann::json describe() const;
};

struct Thinkers {
  Reasoner* reactive = nullptr;  // Reactive and Agile
  Reasoner* planner = nullptr;   // Planning, CodePolicy and Agile
};

struct EpisodeContext {
  std::uint64_t sampling_seed = 0;
  const PromptLibrary* prompts = nullptr;  // built-ins when null
  PolicyHostConfig policy_host;
  // Observes every Agile snapshot as it is handed to the reactive thread.
  std::function<void(int turn, const AgileSnapshot&)> on_snapshot;
};

// Runs one episode to termination under the configured paradigm.
Trajectory run_episode(const EnvConfig& env, const AgentConfig& agent, const Thinkers& thinkers,
                       const EpisodeContext& context = {});

std::string_view to_string(Paradigm p);
std::string_view to_string(ThroughputMode m);
Paradigm parse_paradigm(std::string_view text);
ThroughputMode parse_throughput(std::string_view text);

}  // namespace rtgym
