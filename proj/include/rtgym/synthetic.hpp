#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rtgym/reasoner.hpp"

namespace rtgym {

// Deterministic stream: `thinking` filler tokens (some replaced by marked
// trace tokens), then one Answer token per answer piece. With no tokens at
// all, the answer is delivered for free on completion.
class SyntheticStream final : public TokenStream {
 public:
  SyntheticStream(TokenCount thinking, std::map<TokenCount, std::string> marks,
                  std::vector<std::string> answer_tokens, std::string free_answer = {});

  std::optional<TokenCount> natural_length() const override {
    return thinking_ + answer_tokens_.size();
  }

 protected:
  std::optional<Produced> produce() override;

 private:
  TokenCount thinking_;
  std::map<TokenCount, std::string> marks_;  // thinking index -> text
  std::vector<std::string> answer_tokens_;
  std::string free_answer_;
  TokenCount index_ = 0;
};

// Splits text into whitespace-delimited tokens that concatenate back to it.
std::vector<std::string> split_answer_tokens(const std::string& text);

struct ScriptedCall {
  TokenCount tokens_before_answer = 0;
  std::string answer;
};

// Test double: call i plays schedule[i % size] (or `fallback` when the
// schedule is empty).
struct ScriptedBehavior {
  ScriptedCall fallback;
  std::vector<ScriptedCall> schedule;

  const ScriptedCall& for_call(std::uint64_t call_index) const;
};

class MockReasoner final : public Reasoner {
 public:
  explicit MockReasoner(ScriptedBehavior behavior) : behavior_(std::move(behavior)) {}
  std::unique_ptr<TokenStream> start(const ReasonerRequest& request) override;
  nlohmann::json describe() const override;

 private:
  ScriptedBehavior behavior_;
};

std::unique_ptr<TokenStream> mock_stream(const ScriptedBehavior& behavior, const ReasonerRequest& request);

struct OracleConfig {
  TokenCount cost = 0;    // tokens per call, answer included
  TokenCount jitter = 0;  // +- uniform spread keyed by sampling seed and call index
  int snake_depth = 5;
  int plan_length = 12;
  // Action role only: follow a matching plan line from the snapshot when one
  // addresses the current turn and state.
  bool guided = false;
  std::string policy_source;  // Policy role: program emitted as the answer
};

// Wraps the games' reference solvers behind a token cost. Plans carry one
// "Turn t: A @digest" line per entry, where digest names the predicted state
// at that turn; the same lines are streamed through the thinking trace.
class OracleReasoner final : public Reasoner {
 public:
  OracleReasoner(GameId game, ReasonerRole role, OracleConfig config);
  std::unique_ptr<TokenStream> start(const ReasonerRequest& request) override;
  nlohmann::json describe() const override;

  TokenCount cost_for(const ReasonerRequest& request) const;

 private:
  // Rollout steps keyed by state digest. The solvers are pure functions of
  // the state, so a replan from a state an earlier plan already passed
  // through reuses that work.
  struct Memo;

  GameId game_;
  ReasonerRole role_;
  OracleConfig config_;
  std::shared_ptr<Memo> memo_;
};

struct PlanLine {
  int turn = 0;
  Action action = Action::Stay;
  std::string digest;
};

// Reference action for a full state.
Action oracle_action(GameId game, const nlohmann::json& state, int snake_depth);
// Reference plan from a full state, with predicted digests.
std::vector<PlanLine> oracle_plan(GameId game, const nlohmann::json& state, int snake_depth, int length);

std::string format_plan_line(const PlanLine& line);
std::vector<PlanLine> find_plan_lines(GameId game, const std::string& text);

}  // namespace rtgym
