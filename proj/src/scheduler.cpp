#include "rtgym/scheduler.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "rtgym/env.hpp"
#include "rtgym/error.hpp"

namespace rtgym {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// The in-flight planning call plus the bookkeeping needed to decide when to
// start the next one.
struct PlanningLane {
  std::unique_ptr<TokenStream> stream;
  int origin_turn = 0;
  std::string origin_digest;
  bool wait_for_next_step = false;
};

class EpisodeRunner {
 public:
  EpisodeRunner(const EnvConfig& env_config, const AgentConfig& agent, const Thinkers& thinkers,
                const EpisodeContext& ctx)
      : agent_(agent), thinkers_(thinkers), ctx_(ctx), env_(make_environment(env_config)), clock_(agent.step_budget) {
    traj_.config = env_config;
    traj_.cognitive_load = env_->cognitive_load();
    traj_.initial_digest = env_->digest();
    traj_.agent = agent.describe();
    if (thinkers.reactive) traj_.agent["reactive_reasoner"] = thinkers.reactive->describe();
    if (thinkers.planner) traj_.agent["planning_reasoner"] = thinkers.planner->describe();
    if (agent.paradigm == Paradigm::CodePolicy) traj_.agent["policy_host"] = ctx.policy_host.describe();
    traj_.agent["sampling_seed"] = ctx.sampling_seed;
  }

  Trajectory run() {
    while (!env_->done()) {
      StepRecord rec;
      rec.turn = env_->turn();
      rec.pre_digest = env_->digest();
      lane_.wait_for_next_step = false;

      std::optional<Action> chosen;
      switch (agent_.paradigm) {
        case Paradigm::Reactive: chosen = reactive_step(rec); break;
        case Paradigm::Planning: chosen = planning_step(rec); break;
        case Paradigm::CodePolicy: chosen = policy_step(rec); break;
        case Paradigm::Agile: chosen = agile_step(rec); break;
      }
      rec.source = chosen ? ActionSource::Agent : ActionSource::Default;
      rec.action = chosen.value_or(env_->default_action());

      rec.tokens_charged = charge(rec);

      rec.reward_delta = env_->step(rec.action).reward;
      traj_.steps.push_back(std::move(rec));
    }
    traj_.final_digest = env_->digest();
    traj_.final_reward = env_->total_reward();
    traj_.score = normalize_score(env_->game(), traj_.final_reward);
    return std::move(traj_);
  }

 private:
  // Feeds the step's lane timeline through the clock. Parallel lanes overlap,
  // so only the planning lane's timeline counts as elapsed time there.
  TokenCount charge(const StepRecord& rec) {
    const StepTokens& k = rec.tokens;
    std::vector<TokenCount> segments;
    switch (agent_.paradigm) {
      case Paradigm::Reactive: segments = {k.reactive, k.reactive_idle}; break;
      case Paradigm::Planning:
      case Paradigm::CodePolicy: segments = {k.planning, k.planning_idle}; break;
      case Paradigm::Agile:
        if (agent_.throughput == ThroughputMode::Parallel)
          segments = {k.planning, k.planning_idle};
        else
          segments = {k.planning, k.planning_idle, k.reactive, k.reactive_idle};
        break;
    }
    TokenCount charged = 0;
    std::size_t boundaries = 0;
    for (TokenCount n : segments) {
      boundaries += clock_.advance(n).size();
      charged += n;
    }
    if (boundaries != 1 || clock_.offset_in_step() != 0)
      throw std::logic_error("step " + std::to_string(rec.turn) + " charged " + std::to_string(charged) +
                             " tokens against a budget of " + std::to_string(agent_.step_budget));
    return charged;
  }

  ReasonerRequest request(ReasonerRole role, Reasoner* reasoner, TokenCount budget, std::uint64_t call_index,
                          const AgileSnapshot* snapshot) {
    ReasonerRequest r;
    r.game = env_->game();
    r.role = role;
    r.turn = env_->turn();
    r.state = env_->state_json();
    r.state_digest = env_->digest();
    if (snapshot) r.snapshot = *snapshot;
    r.budget_hint = budget;
    r.sampling_seed = ctx_.sampling_seed;
    r.call_index = call_index;
    if (reasoner->is_live()) {
      r.observation = env_->observation_json();
      r.prompt = (ctx_.prompts ? *ctx_.prompts : builtin_prompts_).render(r);
    }
    return r;
  }

  void incident(int turn, std::string_view lane, std::string_view kind, const std::string& detail) {
    traj_.incidents.push_back({{"turn", turn}, {"lane", lane}, {"kind", kind}, {"detail", detail}});
  }

  std::unique_ptr<TokenStream> start(Reasoner* reasoner, const ReasonerRequest& req, std::string_view lane) {
    try {
      return reasoner->start(req);
    } catch (const std::exception& e) {
      incident(req.turn, lane, "ReasonerFailure", e.what());
      return nullptr;
    }
  }

  // One reactive call with a hard budget; nullopt means the default applies.
  std::optional<Action> react(StepRecord& rec, TokenCount budget, const AgileSnapshot* snapshot) {
    if (!thinkers_.reactive) throw Error(ErrorCode::Config, "paradigm needs a reactive reasoner");
    auto stream = start(thinkers_.reactive,
                        request(ReasonerRole::Action, thinkers_.reactive, budget, reactive_calls_++, snapshot),
                        "reactive");
    if (!stream) return std::nullopt;
    const TokenCount used = stream->pull(budget);
    rec.tokens.reactive = used;
    if (stream->status() == StreamStatus::Completed) {
      rec.tokens.natural = used;
    } else {
      rec.tokens.natural = stream->natural_length();
    }
    switch (stream->status()) {
      case StreamStatus::Failed:
        incident(rec.turn, "reactive", "ReasonerFailure", stream->failure());
        return std::nullopt;
      case StreamStatus::InFlight:
        return std::nullopt;  // truncated at the budget
      case StreamStatus::Completed:
        return parse_action_answer(env_->game(), stream->answer());
    }
    return std::nullopt;
  }

  std::optional<Action> reactive_step(StepRecord& rec) {
    const auto a = react(rec, agent_.reactive_budget, nullptr);
    rec.tokens.reactive_idle = agent_.step_budget - rec.tokens.reactive;
    return a;
  }

  // ---- planning lane -------------------------------------------------------

  bool start_plan(ReasonerRole role) {
    if (!thinkers_.planner) throw Error(ErrorCode::Config, "paradigm needs a planning reasoner");
    lane_.origin_turn = env_->turn();
    lane_.origin_digest = env_->digest();
    lane_.stream = start(thinkers_.planner,
                         request(role, thinkers_.planner, agent_.step_budget, planner_calls_++, nullptr), "planning");
    if (!lane_.stream) {
      lane_.wait_for_next_step = true;
      return false;
    }
    return true;
  }

  void maybe_abandon() {
    if (!lane_.stream || !agent_.abandon_plan_after_steps) return;
    if (env_->turn() - lane_.origin_turn > *agent_.abandon_plan_after_steps) {
      incident(env_->turn(), "planning", "PlanAbandoned",
               "in-flight plan from turn " + std::to_string(lane_.origin_turn) + " dropped as stale");
      lane_.stream.reset();
    }
  }

  bool trigger_fired(std::optional<int> installed_origin) const {
    if (agent_.replan.kind != ReplanTrigger::Kind::EveryKSteps || !installed_origin) return false;
    return env_->turn() - *installed_origin >= agent_.replan.k;
  }

  // Feeds the planning lane up to `budget` tokens. `wants_plan` says whether
  // a new call should start when the lane is empty; `on_complete` consumes a
  // finished stream and returns true when it produced something usable.
  template <class Wants, class OnComplete>
  TokenCount run_lane(TokenCount budget, ReasonerRole role, Wants wants_plan, OnComplete on_complete) {
    maybe_abandon();
    TokenCount used = 0;
    landed_on_boundary_ = false;
    while (true) {
      if (!lane_.stream) {
        if (lane_.wait_for_next_step || used >= budget || !wants_plan()) break;
        if (!start_plan(role)) break;
      }
      used += lane_.stream->pull(budget - used);
      if (lane_.stream->status() == StreamStatus::InFlight) break;
      auto finished = std::move(lane_.stream);
      landed_on_boundary_ = finished->status() == StreamStatus::Completed && used == budget;
      if (finished->status() == StreamStatus::Failed) {
        incident(env_->turn(), "planning", "ReasonerFailure", finished->failure());
        lane_.wait_for_next_step = true;
        break;
      }
      const bool usable = on_complete(*finished);
      // A call that cost nothing and gave nothing would spin forever.
      if (!usable && finished->produced() == 0) lane_.wait_for_next_step = true;
    }
    return used;
  }

  std::optional<Action> planning_step(StepRecord& rec) {
    const int t = env_->turn();
    std::erase_if(plan_, [&](const auto& e) { return e.first < t; });
    std::optional<Action> held;
    if (const auto it = plan_.find(t); it != plan_.end()) held = it->second;
    bool installed = false;
    const TokenCount used = run_lane(
        agent_.step_budget, ReasonerRole::Plan,
        [&] { return plan_.empty() || trigger_fired(plan_origin_); },
        [&](TokenStream& s) {
          auto entries = parse_plan(env_->game(), s.answer(), lane_.origin_turn);
          std::erase_if(entries, [&](const auto& e) { return e.first < t; });
          if (entries.empty()) {
            incident(t, "planning", "EmptyPlan", "plan unparseable or fully elapsed");
            return false;
          }
          plan_ = std::move(entries);
          plan_origin_ = lane_.origin_turn;
          installed = true;
          return true;
        });
    rec.tokens.planning = used;
    rec.tokens.planning_idle = agent_.step_budget - used;

    // A plan whose last token coincides with the step boundary arrives as
    // the environment ticks: the step it would have driven is already gone.
    if (installed && landed_on_boundary_) {
      plan_.erase(t);
      return held;
    }
    const auto it = plan_.find(t);
    if (it == plan_.end()) return std::nullopt;
    const Action a = it->second;
    plan_.erase(it);
    return a;
  }

  // ---- code policies -------------------------------------------------------

  std::optional<Action> policy_step(StepRecord& rec) {
    const int t = env_->turn();
    bool installed = false;
    const TokenCount used = run_lane(
        agent_.step_budget, ReasonerRole::Policy,
        [&] { return !policy_ || trigger_fired(plan_origin_); },
        [&](TokenStream& s) {
          try {
            policy_ = std::make_unique<PolicyProcess>(ctx_.policy_host, extract_code(s.answer()));
            plan_origin_ = lane_.origin_turn;
            installed = true;
            return true;
          } catch (const Error& e) {
            incident(t, "planning", "PolicyCrash", e.what());
            lane_.wait_for_next_step = true;
            return false;
          }
        });
    rec.tokens.planning = used;
    rec.tokens.planning_idle = agent_.step_budget - used;

    if (!policy_ || (installed && landed_on_boundary_)) return std::nullopt;
    try {
      const auto reply = policy_->call(env_->game(), env_->observation_json(), t);
      switch (reply.outcome) {
        case PolicyProcess::Outcome::Action: return reply.action;
        case PolicyProcess::Outcome::Timeout: incident(t, "policy", "PolicyTimeout", reply.detail); break;
        case PolicyProcess::Outcome::ParseFailure: incident(t, "policy", "PolicyParseFailure", reply.detail); break;
      }
    } catch (const Error& e) {
      incident(t, "policy", "PolicyCrash", e.what());
      policy_.reset();
    }
    return std::nullopt;
  }

  // ---- agile ---------------------------------------------------------------

  TokenCount agile_lane(TokenCount budget) {
    return run_lane(
        budget, ReasonerRole::Plan, [] { return true; },
        [&](TokenStream& s) {
          finished_plan_ = s.answer();
          finished_origin_ = lane_.origin_turn;
          // Restart right away only when there is something new to look at.
          if (env_->digest() == lane_.origin_digest) lane_.wait_for_next_step = true;
          return true;
        });
  }

  std::optional<Action> agile_step(StepRecord& rec) {
    const TokenCount nte = agent_.step_budget;
    const TokenCount ntr = agent_.agile_reactive_budget;
    const TokenCount before = nte - ntr;

    TokenCount planned = agile_lane(before);

    AgileSnapshot snap;
    if (lane_.stream) {
      snap.partial_trace = lane_.stream->thinking();
      snap.trace_tokens = lane_.stream->produced();
      snap.trace_origin_turn = lane_.origin_turn;
    }
    snap.observation_digest = env_->digest();
    snap.finished_plan = finished_plan_;
    snap.finished_origin_turn = finished_origin_;
    rec.tokens.trace = snap.trace_tokens;
    if (ctx_.on_snapshot) ctx_.on_snapshot(rec.turn, snap);

    const auto a = react(rec, ntr, &snap);

    if (agent_.throughput == ThroughputMode::Parallel) {
      // Independent throughput: planning keeps streaming through the
      // reactive window.
      planned += agile_lane(ntr);
      rec.tokens.planning = planned;
      rec.tokens.planning_idle = nte - planned;
      rec.tokens.reactive_idle = nte - rec.tokens.reactive;
    } else {
      rec.tokens.planning = planned;
      rec.tokens.planning_idle = before - planned;
      rec.tokens.reactive_idle = ntr - rec.tokens.reactive;
    }
    return a;
  }

  AgentConfig agent_;
  Thinkers thinkers_;
  EpisodeContext ctx_;
  PromptLibrary builtin_prompts_;
  std::unique_ptr<Environment> env_;
  TokenClock clock_;
  Trajectory traj_;
  std::uint64_t reactive_calls_ = 0;
  std::uint64_t planner_calls_ = 0;

  PlanningLane lane_;
  bool landed_on_boundary_ = false;  // last run_lane finished a call exactly at its budget
  std::map<int, Action> plan_;
  std::optional<int> plan_origin_;
  std::unique_ptr<PolicyProcess> policy_;
  std::string finished_plan_;
  std::optional<int> finished_origin_;
};

}  // namespace

void AgentConfig::validate() const {
  if (step_budget < 1) throw Error(ErrorCode::Config, "step budget must be at least 1 token");
  if (paradigm == Paradigm::Reactive && reactive_budget > step_budget)
    throw Error(ErrorCode::Config, "reactive budget exceeds the step budget");
  if (paradigm == Paradigm::Agile && agile_reactive_budget > step_budget)
    throw Error(ErrorCode::Config, "agile reactive budget exceeds the step budget");
  if (replan.kind == ReplanTrigger::Kind::EveryKSteps && replan.k < 1)
    throw Error(ErrorCode::Config, "replan interval must be at least 1 step");
  if (abandon_plan_after_steps && *abandon_plan_after_steps < 1)
    throw Error(ErrorCode::Config, "abandon_plan_after_steps must be positive");
}

nlohmann::json AgentConfig::describe() const {
  nlohmann::json j = {
      {"paradigm", to_string(paradigm)},
      {"step_budget", step_budget},
  };
  switch (paradigm) {
    case Paradigm::Reactive: j["reactive_budget"] = reactive_budget; break;
    case Paradigm::Agile:
      j["agile_reactive_budget"] = agile_reactive_budget;
      j["throughput"] = to_string(throughput);
      break;
    default: break;
  }
  if (paradigm != Paradigm::Reactive) {
    j["replan"] = replan.kind == ReplanTrigger::Kind::OnPlanExhausted
                      ? nlohmann::json("on_plan_exhausted")
                      : nlohmann::json{{"every_k_steps", replan.k}};
    if (abandon_plan_after_steps) j["abandon_plan_after_steps"] = *abandon_plan_after_steps;
  }
  return j;
}

Trajectory run_episode(const EnvConfig& env, const AgentConfig& agent, const Thinkers& thinkers,
                       const EpisodeContext& context) {
  env.validate();
  agent.validate();
  return EpisodeRunner(env, agent, thinkers, context).run();
}

std::string_view to_string(Paradigm p) {
  switch (p) {
    case Paradigm::Reactive: return "reactive";
    case Paradigm::Planning: return "planning";
    case Paradigm::CodePolicy: return "code_policy";
    case Paradigm::Agile: return "agile";
  }
  return "?";
}

std::string_view to_string(ThroughputMode m) {
  return m == ThroughputMode::Parallel ? "parallel" : "concurrent";
}

Paradigm parse_paradigm(std::string_view text) {
  const auto t = lower(text);
  if (t == "reactive") return Paradigm::Reactive;
  if (t == "planning") return Paradigm::Planning;
  if (t == "code_policy" || t == "code-policy" || t == "codepolicy") return Paradigm::CodePolicy;
  if (t == "agile") return Paradigm::Agile;
  throw Error(ErrorCode::Config, "unknown paradigm '" + std::string(text) + "'");
}

ThroughputMode parse_throughput(std::string_view text) {
  const auto t = lower(text);
  if (t == "parallel") return ThroughputMode::Parallel;
  if (t == "concurrent") return ThroughputMode::Concurrent;
  throw Error(ErrorCode::Config, "unknown throughput mode '" + std::string(text) + "'");
}

}  // namespace rtgym
