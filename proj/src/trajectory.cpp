#include "rtgym/trajectory.hpp"

#include <fstream>
#include <sstream>

#include "rtgym/env.hpp"
#include "rtgym/error.hpp"

namespace rtgym {

namespace {

nlohmann::json step_json(const StepRecord& s) {
  nlohmann::json tokens = {
      {"reactive", s.tokens.reactive},
      {"reactive_idle", s.tokens.reactive_idle},
      {"planning", s.tokens.planning},
      {"planning_idle", s.tokens.planning_idle},
  };
  if (s.tokens.natural) tokens["natural"] = *s.tokens.natural;
  if (s.tokens.trace) tokens["trace"] = *s.tokens.trace;
  return {
      {"turn", s.turn},
      {"pre_digest", s.pre_digest},
      {"action", action_symbol(s.action)},
      {"source", to_string(s.source)},
      {"tokens_charged", s.tokens_charged},
      {"tokens", tokens},
      {"reward_delta", s.reward_delta},
  };
}

StepRecord step_from_json(const nlohmann::json& j, GameId game) {
  StepRecord s;
  s.turn = j.at("turn").get<int>();
  s.pre_digest = j.at("pre_digest").get<std::string>();
  const auto symbol = j.at("action").get<std::string>();
  const auto action = parse_action(game, symbol);
  if (!action) throw Error(ErrorCode::SchemaMismatch, "action '" + symbol + "' not in the game's alphabet");
  s.action = *action;
  const auto source = j.at("source").get<std::string>();
  if (source == "agent") s.source = ActionSource::Agent;
  else if (source == "default") s.source = ActionSource::Default;
  else throw Error(ErrorCode::SchemaMismatch, "unknown action source '" + source + "'");
  s.tokens_charged = j.at("tokens_charged").get<TokenCount>();
  const auto& t = j.at("tokens");
  s.tokens.reactive = t.at("reactive").get<TokenCount>();
  s.tokens.reactive_idle = t.at("reactive_idle").get<TokenCount>();
  s.tokens.planning = t.at("planning").get<TokenCount>();
  s.tokens.planning_idle = t.at("planning_idle").get<TokenCount>();
  if (t.contains("natural")) s.tokens.natural = t.at("natural").get<TokenCount>();
  if (t.contains("trace")) s.tokens.trace = t.at("trace").get<TokenCount>();
  s.reward_delta = j.at("reward_delta").get<double>();
  return s;
}

}  // namespace

std::string_view to_string(ActionSource source) {
  return source == ActionSource::Agent ? "agent" : "default";
}

void write_trajectory(std::ostream& out, const Trajectory& t) {
  nlohmann::json header = {
      {"schema_version", kTrajectorySchemaVersion},
      {"type", "header"},
      {"config", t.config},
      {"agent", t.agent},
      {"cognitive_load", t.cognitive_load},
      {"initial_digest", t.initial_digest},
      {"final_digest", t.final_digest},
      {"steps", t.steps.size()},
      {"final_reward", t.final_reward},
      {"score", t.score},
      {"incidents", t.incidents},
  };
  out << header.dump() << '\n';
  for (const StepRecord& s : t.steps) out << step_json(s).dump() << '\n';
}

std::string serialize_trajectory(const Trajectory& t) {
  std::ostringstream out;
  write_trajectory(out, t);
  return out.str();
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_trajectory(out, t);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Trajectory read_trajectory(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::SchemaMismatch, "empty trajectory log");
  Trajectory t;
  try {
    const auto header = nlohmann::json::parse(line);
    const int version = header.at("schema_version").get<int>();
    if (version != kTrajectorySchemaVersion) {
      throw Error(ErrorCode::SchemaMismatch, "log schema version " + std::to_string(version) +
                                                 ", this build reads " +
                                                 std::to_string(kTrajectorySchemaVersion));
    }
    if (header.at("type") != "header") throw Error(ErrorCode::SchemaMismatch, "first line is not a header");
    t.config = header.at("config").get<EnvConfig>();
    t.agent = header.at("agent");
    t.cognitive_load = header.at("cognitive_load").get<int>();
    t.initial_digest = header.at("initial_digest").get<std::string>();
    t.final_digest = header.at("final_digest").get<std::string>();
    t.final_reward = header.at("final_reward").get<double>();
    t.score = header.at("score").get<double>();
    for (const auto& i : header.at("incidents")) t.incidents.push_back(i);
    const auto expected = header.at("steps").get<std::size_t>();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      t.steps.push_back(step_from_json(nlohmann::json::parse(line), t.config.game));
    }
    if (t.steps.size() != expected) {
      throw Error(ErrorCode::SchemaMismatch, "header announces " + std::to_string(expected) +
                                                 " steps, log has " + std::to_string(t.steps.size()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, e.what());
  }
  return t;
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  return read_trajectory(in);
}

ReplayReport replay(const Trajectory& t) {
  auto env = make_environment(t.config);
  if (env->digest() != t.initial_digest) throw DivergenceError(0, "initial state differs from the log");

  ReplayReport report;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const StepRecord& s = t.steps[i];
    if (env->done()) throw DivergenceError(i, "episode ended before the log did");
    if (s.turn != env->turn() || env->digest() != s.pre_digest)
      throw DivergenceError(i, "pre-step state differs from the log");
    const StepOutcome out = env->step(s.action);
    const std::string& next = i + 1 < t.steps.size() ? t.steps[i + 1].pre_digest : t.final_digest;
    if (out.reward != s.reward_delta) throw DivergenceError(i, "reward differs from the log");
    if (env->digest() != next) throw DivergenceError(i, "post-step state differs from the log");
    ++report.steps_checked;
  }
  if (!env->done()) throw DivergenceError(t.steps.size(), "log ends before the episode did");
  if (env->total_reward() != t.final_reward)
    throw DivergenceError(t.steps.size(), "final reward differs from the log");
  report.final_reward = env->total_reward();
  return report;
}

}  // namespace rtgym
