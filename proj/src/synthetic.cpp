#include "rtgym/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <mutex>
#include <unordered_map>

#include "rtgym/env.hpp"
#include "rtgym/freeway.hpp"
#include "rtgym/overcooked.hpp"
#include "rtgym/rng.hpp"
#include "rtgym/snake.hpp"

namespace rtgym {

namespace {

constexpr std::string_view kFiller = ".";

std::string boxed(Action a) { return "\\boxed{" + std::string(action_symbol(a)) + "}"; }

template <class State, class StepFn, class DigestFn, class ChooseFn>
std::vector<PlanLine> rollout(State s, int length, StepFn step, DigestFn digest, ChooseFn choose) {
  std::vector<PlanLine> out;
  for (int i = 0; i < length && !s.done; ++i) {
    const Action a = choose(s);
    out.push_back({s.turn, a, digest(s)});
    s = step(s, a).state;
  }
  return out;
}

template <class State>
struct MemoStep {
  Action action;
  State next;
  std::string next_digest;
};

template <class State>
using MemoTable = std::unordered_map<std::string, MemoStep<State>>;

constexpr std::size_t kMemoLimit = 1 << 16;

template <class State, class StepFn, class DigestFn, class ChooseFn>
std::vector<PlanLine> memo_rollout(MemoTable<State>& memo, State s, std::string d, int length, StepFn step,
                                   DigestFn digest, ChooseFn choose) {
  if (memo.size() > kMemoLimit) memo.clear();
  std::vector<PlanLine> out;
  for (int i = 0; i < length && !s.done; ++i) {
    auto it = memo.find(d);
    if (it == memo.end()) {
      const Action a = choose(s);
      State next = step(s, a).state;
      std::string nd = digest(next);
      it = memo.emplace(d, MemoStep<State>{a, std::move(next), std::move(nd)}).first;
    }
    out.push_back({s.turn, it->second.action, d});
    s = it->second.next;
    d = it->second.next_digest;
  }
  return out;
}

}  // namespace

// The oracles are pure functions of the full state, so every reasoner in the
// process shares one table keyed by digest. Episodes of a matrix revisit the
// same states across pressures, paradigms and sampling seeds.
struct OracleReasoner::Memo {
  std::mutex mu;
  std::map<int, MemoTable<snake::SnakeState>> snake;  // by search depth
  MemoTable<overcooked::KitchenState> kitchen;
  std::unordered_map<std::string, Action> actions;  // "<game>/<depth>/<digest>"
};

SyntheticStream::SyntheticStream(TokenCount thinking, std::map<TokenCount, std::string> marks,
                                 std::vector<std::string> answer_tokens, std::string free_answer)
    : thinking_(thinking),
      marks_(std::move(marks)),
      answer_tokens_(std::move(answer_tokens)),
      free_answer_(std::move(free_answer)) {}

std::optional<TokenStream::Produced> SyntheticStream::produce() {
  const TokenCount total = thinking_ + answer_tokens_.size();
  if (index_ >= total) {
    if (!free_answer_.empty()) append_free_answer(free_answer_);
    free_answer_.clear();
    complete();
    return std::nullopt;
  }
  const TokenCount i = index_++;
  if (i < thinking_) {
    auto it = marks_.find(i);
    return Produced{it == marks_.end() ? std::string(kFiller) : it->second, TokenKind::Thinking};
  }
  return Produced{answer_tokens_[i - thinking_], TokenKind::Answer};
}

std::vector<std::string> split_answer_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = i;
    while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    // Leading whitespace with no word after it joins the previous token.
    if (j == text.size() && !out.empty() &&
        std::all_of(text.begin() + static_cast<std::ptrdiff_t>(i), text.end(),
                    [](unsigned char c) { return std::isspace(c); })) {
      out.back() += text.substr(i);
      break;
    }
    out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

const ScriptedCall& ScriptedBehavior::for_call(std::uint64_t call_index) const {
  if (schedule.empty()) return fallback;
  return schedule[call_index % schedule.size()];
}

std::unique_ptr<TokenStream> mock_stream(const ScriptedBehavior& behavior, const ReasonerRequest& request) {
  const ScriptedCall& call = behavior.for_call(request.call_index);
  auto tokens = split_answer_tokens(call.answer);
  std::string free_answer;
  if (call.tokens_before_answer == 0 && tokens.empty()) free_answer = call.answer;
  return std::make_unique<SyntheticStream>(call.tokens_before_answer, std::map<TokenCount, std::string>{},
                                           std::move(tokens), std::move(free_answer));
}

std::unique_ptr<TokenStream> MockReasoner::start(const ReasonerRequest& request) {
  return mock_stream(behavior_, request);
}

nlohmann::json MockReasoner::describe() const {
  nlohmann::json schedule = nlohmann::json::array();
  for (const auto& c : behavior_.schedule) schedule.push_back({c.tokens_before_answer, c.answer});
  return {{"kind", "mock"},
          {"tokens_before_answer", behavior_.fallback.tokens_before_answer},
          {"answer", behavior_.fallback.answer},
          {"schedule", schedule}};
}

OracleReasoner::OracleReasoner(GameId game, ReasonerRole role, OracleConfig config)
    : game_(game), role_(role), config_(std::move(config)) {
  static const auto shared = std::make_shared<Memo>();
  memo_ = shared;
}

TokenCount OracleReasoner::cost_for(const ReasonerRequest& request) const {
  if (config_.jitter == 0) return config_.cost;
  CounterRng rng(request.sampling_seed, "oracle.cost", request.call_index);
  const auto spread = static_cast<std::int64_t>(config_.jitter);
  const auto delta = rng.between(-spread, spread);
  const auto cost = static_cast<std::int64_t>(config_.cost) + delta;
  return static_cast<TokenCount>(std::max<std::int64_t>(0, cost));
}

std::unique_ptr<TokenStream> OracleReasoner::start(const ReasonerRequest& request) {
  const TokenCount cost = cost_for(request);
  std::string answer;
  std::vector<PlanLine> lines;

  switch (role_) {
    case ReasonerRole::Action: {
      std::optional<Action> a;
      if (config_.guided && request.snapshot) {
        const AgileSnapshot& snap = *request.snapshot;
        for (const std::string* text : {&snap.partial_trace, &snap.finished_plan}) {
          for (const PlanLine& l : find_plan_lines(game_, *text)) {
            if (l.turn == request.turn && l.digest == request.state_digest) a = l.action;
          }
          if (a) break;
        }
      }
      if (!a && !request.state_digest.empty()) {
        const std::string key = std::string(to_string(game_)) + "/" + std::to_string(config_.snake_depth) + "/" +
                                request.state_digest;
        {
          std::lock_guard lock(memo_->mu);
          if (auto it = memo_->actions.find(key); it != memo_->actions.end()) a = it->second;
        }
        if (!a) {
          a = oracle_action(game_, request.state, config_.snake_depth);
          std::lock_guard lock(memo_->mu);
          if (memo_->actions.size() > kMemoLimit) memo_->actions.clear();
          memo_->actions.emplace(key, *a);
        }
      }
      if (!a) a = oracle_action(game_, request.state, config_.snake_depth);
      answer = boxed(*a);
      break;
    }
    case ReasonerRole::Plan: {
      const std::string digest = request.state_digest.empty() ? state_digest(request.state) : request.state_digest;
      std::lock_guard lock(memo_->mu);
      switch (game_) {
        case GameId::Freeway:
          lines = oracle_plan(game_, request.state, config_.snake_depth, config_.plan_length);
          break;
        case GameId::Snake:
          lines = memo_rollout(
              memo_->snake[config_.snake_depth], snake::state_from_json(request.state), digest, config_.plan_length, snake::step,
              [](const auto& st) { return state_digest(snake::state_json(st)); },
              [&](const auto& st) { return snake::greedy_oracle(st, config_.snake_depth); });
          break;
        case GameId::Overcooked:
          lines = memo_rollout(
              memo_->kitchen, overcooked::state_from_json(request.state), digest, config_.plan_length,
              overcooked::step, [](const auto& st) { return state_digest(overcooked::state_json(st)); },
              [](const auto& st) { return overcooked::scripted_soup_oracle(st); });
          break;
      }
      for (const PlanLine& l : lines) answer += format_plan_line(l) + "\n";
      break;
    }
    case ReasonerRole::Policy:
      answer = "```python\n" + config_.policy_source + "\n```";
      break;
  }

  if (cost == 0) return std::make_unique<SyntheticStream>(0, std::map<TokenCount, std::string>{},
                                                          std::vector<std::string>{}, answer);

  // The plan lines surface in the trace as they are "worked out", evenly
  // spaced through the thinking phase.
  const TokenCount thinking = cost - 1;
  std::map<TokenCount, std::string> marks;
  if (!lines.empty() && thinking >= lines.size()) {
    const TokenCount n = lines.size();
    for (TokenCount i = 0; i < n; ++i) {
      const TokenCount at = thinking * (i + 1) / (n + 1);
      marks[at] = format_plan_line(lines[i]) + "\n";
    }
  }
  return std::make_unique<SyntheticStream>(thinking, std::move(marks), std::vector<std::string>{answer});
}

nlohmann::json OracleReasoner::describe() const {
  return {{"kind", "oracle"},
          {"game", to_string(game_)},
          {"role", to_string(role_)},
          {"cost", config_.cost},
          {"jitter", config_.jitter},
          {"snake_depth", config_.snake_depth},
          {"plan_length", config_.plan_length},
          {"guided", config_.guided}};
}

Action oracle_action(GameId game, const nlohmann::json& state, int snake_depth) {
  switch (game) {
    case GameId::Freeway: {
      const auto s = freeway::state_from_json(state);
      const auto path = freeway::shortest_path(s);
      return path && !path->empty() ? path->front() : Action::Stay;
    }
    case GameId::Snake:
      return snake::greedy_oracle(snake::state_from_json(state), snake_depth);
    case GameId::Overcooked:
      return overcooked::scripted_soup_oracle(overcooked::state_from_json(state));
  }
  return Action::Stay;
}

std::vector<PlanLine> oracle_plan(GameId game, const nlohmann::json& state, int snake_depth, int length) {
  switch (game) {
    case GameId::Freeway: {
      const auto s = freeway::state_from_json(state);
      const auto path = freeway::shortest_path(s);
      std::vector<Action> actions = path ? *path : std::vector<Action>{};
      std::size_t i = 0;
      // The full crossing is one plan; without one, hold position.
      return rollout(
          s, path ? static_cast<int>(actions.size()) : 1, freeway::step,
          [](const auto& st) { return state_digest(freeway::state_json(st)); },
          [&](const auto&) { return i < actions.size() ? actions[i++] : Action::Stay; });
    }
    case GameId::Snake:
      return rollout(
          snake::state_from_json(state), length, snake::step,
          [](const auto& st) { return state_digest(snake::state_json(st)); },
          [&](const auto& st) { return snake::greedy_oracle(st, snake_depth); });
    case GameId::Overcooked:
      return rollout(
          overcooked::state_from_json(state), length, overcooked::step,
          [](const auto& st) { return state_digest(overcooked::state_json(st)); },
          [](const auto& st) { return overcooked::scripted_soup_oracle(st); });
  }
  return {};
}

std::string format_plan_line(const PlanLine& line) {
  return "Turn " + std::to_string(line.turn) + ": " + std::string(action_symbol(line.action)) + " @" +
         line.digest;
}

std::vector<PlanLine> find_plan_lines(GameId game, const std::string& text) {
  std::vector<PlanLine> out;
  std::size_t pos = 0;
  while ((pos = text.find("Turn ", pos)) != std::string::npos) {
    std::size_t i = pos + 5;
    pos = i;
    std::size_t j = i;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    if (j == i || j >= text.size() || text[j] != ':') continue;
    const int turn = std::stoi(text.substr(i, j - i));
    std::size_t k = j + 1;
    while (k < text.size() && text[k] == ' ') ++k;
    std::size_t e = k;
    while (e < text.size() && std::isalpha(static_cast<unsigned char>(text[e]))) ++e;
    const auto action = parse_action(game, std::string_view(text).substr(k, e - k));
    if (!action) continue;
    PlanLine line{turn, *action, {}};
    if (e + 1 < text.size() && text[e] == ' ' && text[e + 1] == '@') {
      std::size_t d = e + 2;
      std::size_t f = d;
      while (f < text.size() && std::isxdigit(static_cast<unsigned char>(text[f]))) ++f;
      line.digest = text.substr(d, f - d);
    }
    out.push_back(std::move(line));
  }
  return out;
}

}  // namespace rtgym
