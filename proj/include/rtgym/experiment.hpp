#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rtgym/llm.hpp"
#include "rtgym/scheduler.hpp"
#include "rtgym/token_clock.hpp"

namespace rtgym {

enum class RunMode : std::uint8_t { Simulate, Live };

std::string_view to_string(RunMode mode);
RunMode parse_run_mode(std::string_view text);

// One run configuration. Field by field it mirrors the JSON file documented
// in the README; `raw` keeps the normalized JSON for the manifest.
struct ExperimentConfig {
  std::string run_id = "run";
  RunMode mode = RunMode::Simulate;
  std::vector<GameId> games;
  std::vector<Difficulty> difficulties;
  std::vector<TokenCount> pressures;  // N_T_E values
  std::vector<Paradigm> paradigms;
  std::vector<std::uint64_t> game_seeds;
  std::vector<std::uint64_t> sampling_seeds;
  nlohmann::json env = nlohmann::json::object();  // EnvConfig fields shared by every episode
  AgentConfig agent;                              // budgets are per-pressure templates, see cell_agent()
  std::vector<TokenCount> agile_reactive_budgets;  // more than one value sweeps N_T_R
  nlohmann::json reasoners = nlohmann::json::object();
  std::optional<LlmEndpoint> llm;
  std::filesystem::path templates;  // empty: built-in prompt texts
  PolicyHostConfig policy_host;
  std::optional<std::filesystem::path> walltime_model;
  std::filesystem::path base_dir;  // relative paths resolve against this

  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  nlohmann::json to_json() const;

  // Throws Config. In Live mode this also checks the endpoint and its key.
  void validate() const;
};

ExperimentConfig load_experiment(const std::filesystem::path& path,
                                 const std::vector<std::string>& overrides = {});

// Applies "a.b.c=value" (value parsed as JSON when possible, else a string).
void apply_override(nlohmann::json& config, const std::string& assignment);

struct CellKey {
  GameId game = GameId::Freeway;
  Difficulty difficulty = Difficulty::Medium;
  TokenCount pressure = 8000;
  Paradigm paradigm = Paradigm::Reactive;
  std::optional<TokenCount> agile_reactive_budget;  // set only in N_T_R sweeps

  std::string name() const;  // <difficulty>-<pressure>-<paradigm>[-r<NTR>]
  std::filesystem::path dir() const;  // <game>/<name>
  auto operator<=>(const CellKey&) const = default;
};

struct EpisodeKey {
  CellKey cell;
  std::uint64_t game_seed = 0;
  std::uint64_t sampling_seed = 0;
  std::filesystem::path file() const;  // relative to the run directory
};

std::vector<EpisodeKey> expand_matrix(const ExperimentConfig& config);

EnvConfig episode_env(const ExperimentConfig& config, const EpisodeKey& key);
AgentConfig cell_agent(const ExperimentConfig& config, const CellKey& cell);

struct EpisodeSummary {
  EpisodeKey key;
  bool ok = false;
  std::string error;
  double final_reward = 0;
  double score = 0;
  int default_steps = 0;
  std::size_t incidents = 0;
};

struct RunResult {
  std::filesystem::path dir;
  std::vector<EpisodeSummary> episodes;
  std::size_t failures() const;
};

// Runs one episode in isolation (its own reasoners and policy host).
Trajectory run_matrix_episode(const ExperimentConfig& config, const EpisodeKey& key);

// Writes <out>/<run_id>/{manifest.json, summary.csv, <game>/<cell>/episode-*.jsonl}.
// Output bytes do not depend on `jobs`.
RunResult run_matrix(const ExperimentConfig& config, const std::filesystem::path& out_root, int jobs = 1);

std::string code_version();

}  // namespace rtgym
