#pragma once

#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "rtgym/token_clock.hpp"
#include "rtgym/types.hpp"

namespace rtgym {

enum class TokenKind : std::uint8_t { Thinking, Answer };

struct TokenEvent {
  std::string text;
  TokenKind kind = TokenKind::Thinking;
  std::uint64_t cumulative = 0;  // 1 for the first token of a stream
  friend bool operator==(const TokenEvent&, const TokenEvent&) = default;
};

enum class StreamStatus : std::uint8_t { InFlight, Completed, Failed };

// A token-producing decision process. Consumers pull tokens one at a time
// (or in bounded batches); the stream keeps the transcript so a partial
// thinking trace can be copied out at any point.
class TokenStream {
 public:
  virtual ~TokenStream() = default;

  // Next token, or nullopt once the stream has completed or failed.
  std::optional<TokenEvent> next();

  // Pulls until `max_tokens` were consumed or the stream ended. Returns the
  // number consumed by this call.
  TokenCount pull(TokenCount max_tokens);

  StreamStatus status() const noexcept { return status_; }
  const std::string& failure() const noexcept { return failure_; }
  TokenCount produced() const noexcept { return produced_; }
  TokenCount thinking_tokens() const noexcept { return thinking_tokens_; }

  const std::string& thinking() const noexcept { return thinking_; }
  const std::string& answer() const noexcept { return answer_; }

  // Total length the stream would reach if never truncated, when the
  // producer knows it in advance (synthetic streams do; live ones do not).
  virtual std::optional<TokenCount> natural_length() const { return std::nullopt; }

 protected:
  struct Produced {
    std::string text;
    TokenKind kind = TokenKind::Thinking;
  };
  // nullopt ends the stream: call complete() or fail() before returning it.
  virtual std::optional<Produced> produce() = 0;

  void complete() { status_ = StreamStatus::Completed; }
  void fail(std::string why) {
    status_ = StreamStatus::Failed;
    failure_ = std::move(why);
  }
  // Answer text delivered without consuming tokens (zero-latency oracles).
  void append_free_answer(const std::string& text) { answer_ += text; }

 private:
  StreamStatus status_ = StreamStatus::InFlight;
  std::string failure_;
  TokenCount produced_ = 0;
  TokenCount thinking_tokens_ = 0;
  std::string thinking_;
  std::string answer_;
  std::optional<Produced> lookahead_;
};

enum class ReasonerRole : std::uint8_t { Action, Plan, Policy };

std::string_view to_string(ReasonerRole role);

// What the reactive thread sees of the planning thread.
struct AgileSnapshot {
  std::string partial_trace;           // thinking text streamed so far by the in-flight plan
  TokenCount trace_tokens = 0;         // tokens charged to that plan up to the snapshot
  std::optional<int> trace_origin_turn;
  std::string observation_digest;      // state the reactive thread acts on
  std::string finished_plan;           // thinking + answer of the latest completed plan
  std::optional<int> finished_origin_turn;
};

struct ReasonerRequest {
  GameId game = GameId::Freeway;
  ReasonerRole role = ReasonerRole::Action;
  int turn = 0;
  nlohmann::json state;        // full state, for oracles that simulate
  nlohmann::json observation;  // what a policy program would be handed
  std::string state_digest;
  std::string prompt;          // rendered template, for language-model reasoners
  std::optional<AgileSnapshot> snapshot;
  TokenCount budget_hint = 0;
  std::uint64_t sampling_seed = 0;
  std::uint64_t call_index = 0;  // per-reasoner call counter within an episode
};

class Reasoner {
 public:
  virtual ~Reasoner() = default;
  virtual std::unique_ptr<TokenStream> start(const ReasonerRequest& request) = 0;
  virtual nlohmann::json describe() const = 0;
  // Live reasoners need network and a key; simulation refuses them.
  virtual bool is_live() const { return false; }
};

}  // namespace rtgym
