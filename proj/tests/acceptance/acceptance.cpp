// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails. Tolerances are pinned here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "freeway_oracle.hpp"
#include "gen.hpp"
#include "rtgym/env.hpp"
#include "rtgym/error.hpp"
#include "rtgym/experiment.hpp"
#include "rtgym/freeway.hpp"
#include "rtgym/scheduler.hpp"
#include "rtgym/stats.hpp"
#include "rtgym/synthetic.hpp"
#include "rtgym/token_clock.hpp"
#include "rtgym/trajectory.hpp"

using namespace rtgym;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kConfigs = RTGYM_CONFIG_DIR;

constexpr double kMatrixSeconds = 60;
constexpr double kTrendSeconds = 300;
constexpr double kTrendAgileSlack = 0.02;
constexpr double kTrendPlanningDrop = 0.3;
constexpr double kTStatTol = 1e-6;
constexpr double kOracleTol = 1e-10;
constexpr double kFitRelTol = 1e-9;
constexpr double kRSquaredTol = 1e-12;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = ss.str();
  }
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rtgym_accept_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Mean score per cell from a finished run; NaN for a cell with failures.
std::map<CellKey, double> cell_means(const RunResult& r) {
  std::map<CellKey, std::pair<double, int>> acc;
  std::map<CellKey, bool> failed;
  for (const auto& e : r.episodes) {
    auto& a = acc[e.key.cell];
    a.first += e.score;
    a.second += 1;
    if (!e.ok) failed[e.key.cell] = true;
  }
  std::map<CellKey, double> out;
  for (const auto& [k, a] : acc) out[k] = failed[k] ? std::nan("") : a.first / a.second;
  return out;
}

Verdict determinism() {
  const auto config = load_experiment(kConfigs / "oracle_matrix.json");
  const fs::path a = scratch("matrix_a"), b = scratch("matrix_b");
  const auto t0 = Clock::now();
  const auto ra = run_matrix(config, a, 1);
  const double secs = seconds_since(t0);
  const auto rb = run_matrix(config, b, 1);
  const bool same = tree(a) == tree(b);
  std::size_t replayed = 0, total = 0;
  for (const auto& e : ra.episodes) {
    ++total;
    if (!e.ok) continue;
    try {
      const Trajectory t = load_trajectory(ra.dir / e.key.file());
      replay(t);
      ++replayed;
    } catch (const Error&) {
    }
  }
  fs::remove_all(a);
  fs::remove_all(b);
  Verdict v;
  v.pass = same && replayed == total && ra.failures() == 0 && rb.failures() == 0 && secs < kMatrixSeconds;
  v.detail = std::to_string(total) + " episodes, rerun " + (same ? "byte-identical" : "DIFFERS") + ", replay OK " +
             std::to_string(replayed) + "/" + std::to_string(total) + ", matrix " + fmt("%.1f", secs) + " s (< " +
             fmt("%.0f", kMatrixSeconds) + ")";
  return v;
}

Verdict freeway_semantics() {
  const auto r = rtgym::testing::freeway_semantics_suite(10000, 20240901);
  return {r.failures == 0, "10000 configurations, " + std::to_string(r.checks) + " checks, " +
                               std::to_string(r.failures) + " failures" +
                               (r.first_failure.empty() ? "" : " (first: " + r.first_failure + ")")};
}

Verdict banding() {
  int bad = 0, total = 0;
  std::string first;
  for (GameId g : {GameId::Freeway, GameId::Snake, GameId::Overcooked})
    for (Difficulty d : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard}) {
      const LoadBand band = load_band(g, d);
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        EnvConfig c;
        c.game = g;
        c.difficulty = d;
        c.seed = seed;
        const auto env = make_environment(c);
        const auto& st = env->state_json();
        int load = -1;
        if (g == GameId::Freeway) {
          load = rtgym::testing::brute_min_steps(freeway::state_from_json(st)).value_or(-1);
        } else if (g == GameId::Snake) {
          load = static_cast<int>(st.at("obstacles").size());
        } else {
          const auto& grid = st.at("grid");
          const std::string row = grid.at(grid.size() / 2).get<std::string>();
          load = 0;
          for (std::size_t x = 1; x + 1 < row.size(); ++x) load += row[x] == '#';
        }
        ++total;
        if (!band.contains(load)) {
          if (bad++ == 0)
            first = std::string(to_string(g)) + "/" + std::string(to_string(d)) + " seed " + std::to_string(seed);
        }
      }
    }
  return {bad == 0, std::to_string(total) + " layouts, " + std::to_string(bad) + " outside their band" +
                        (first.empty() ? "" : " (first: " + first + ")")};
}

Verdict oracle_bounds() {
  int freeway_bad = 0, freeway_n = 0, cook_bad = 0, cook_n = 0;
  double cook_min = 1e9;
  AgentConfig a;
  a.paradigm = Paradigm::Reactive;
  for (Difficulty d : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard})
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      EnvConfig c;
      c.difficulty = d;
      c.seed = seed;
      const int s = *rtgym::testing::brute_min_steps(freeway::state_from_json(make_environment(c)->state_json()));
      OracleReasoner bfs(GameId::Freeway, ReasonerRole::Action, {.cost = 0});
      const auto t = run_episode(c, a, {&bfs, nullptr});
      ++freeway_n;
      freeway_bad += t.final_reward != static_cast<double>(c.step_limit - s);
    }
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    EnvConfig c;
    c.game = GameId::Overcooked;
    c.difficulty = Difficulty::Easy;
    c.seed = seed;
    OracleReasoner cook(GameId::Overcooked, ReasonerRole::Action, {.cost = 0});
    const auto t = run_episode(c, a, {&cook, nullptr});
    ++cook_n;
    cook_min = std::min(cook_min, t.final_reward);
    cook_bad += t.final_reward < 28 || t.score < 0.5;
  }
  return {freeway_bad == 0 && cook_bad == 0,
          "Freeway R = M - S on " + std::to_string(freeway_n - freeway_bad) + "/" + std::to_string(freeway_n) +
              " seeds; Overcooked Easy R >= 28 and S >= 0.5 on " + std::to_string(cook_n - cook_bad) + "/" +
              std::to_string(cook_n) + " seeds (min R " + fmt("%.0f", cook_min) + ")"};
}

Verdict clock_accounting() {
  long steps = 0, bad_charge = 0, trace_checked = 0, bad_trace = 0;
  for (GameId g : {GameId::Freeway, GameId::Snake, GameId::Overcooked})
    for (Paradigm p : {Paradigm::Reactive, Paradigm::Planning, Paradigm::CodePolicy, Paradigm::Agile})
      for (ThroughputMode mode : {ThroughputMode::Parallel, ThroughputMode::Concurrent}) {
        EnvConfig env;
        env.game = g;
        env.seed = 4;
        env.step_limit = 40;
        AgentConfig a;
        a.paradigm = p;
        a.step_budget = 4000;
        a.reactive_budget = 4000;
        a.agile_reactive_budget = 1000;
        a.throughput = mode;
        OracleReasoner reactive(g, ReasonerRole::Action, {.cost = 1500, .jitter = 1000, .guided = true});
        OracleReasoner planner(g, ReasonerRole::Plan, {.cost = 10000, .jitter = 5000});
        const std::string src = "def next_action(state):\n    return '" +
                                std::string(action_symbol(env.game == GameId::Freeway ? Action::Up
                                                          : env.game == GameId::Snake ? Action::Right
                                                                                      : Action::Idle)) +
                                "'\n";
        OracleReasoner coder(g, ReasonerRole::Policy, {.cost = 9000, .policy_source = src});
        Reasoner* plan = p == Paradigm::CodePolicy ? static_cast<Reasoner*>(&coder) : &planner;
        const auto t = run_episode(env, a, {&reactive, plan}, {.sampling_seed = 1});
        for (const auto& s : t.steps) {
          ++steps;
          bad_charge += s.tokens_charged != a.step_budget;
        }
      }

  // Agile trace lengths on a 50-step fixture against the arithmetic oracle:
  // each plan costs C > N_T_E and the lane restarts as soon as one completes.
  const TokenCount n = 8000, r = 2000;
  for (TokenCount cost : {9000u, 12000u, 20000u, 33001u})
    for (ThroughputMode mode : {ThroughputMode::Parallel, ThroughputMode::Concurrent}) {
      MockReasoner reactive({{100, "\\boxed{S}"}, {}});
      MockReasoner planner({{cost - 1, "\\boxed{S}"}, {}});
      AgentConfig a;
      a.paradigm = Paradigm::Agile;
      a.step_budget = n;
      a.agile_reactive_budget = r;
      a.throughput = mode;
      EnvConfig env;
      env.seed = 11;
      env.step_limit = 50;
      std::vector<TokenCount> seen;
      EpisodeContext ctx;
      ctx.on_snapshot = [&](int, const AgileSnapshot& s) { seen.push_back(s.trace_tokens); };
      run_episode(env, a, {&reactive, &planner}, ctx);
      if (seen.size() != 50) ++bad_trace;
      for (std::size_t k = 0; k < seen.size(); ++k) {
        // Tokens the lane has produced by step k's snapshot, wrapped into the current plan.
        const TokenCount lane_before = mode == ThroughputMode::Parallel ? k * n + (n - r) : (k + 1) * (n - r);
        ++trace_checked;
        bad_trace += seen[k] != lane_before % cost;
      }
    }
  return {bad_charge == 0 && bad_trace == 0 && trace_checked > 0,
          std::to_string(steps - bad_charge) + "/" + std::to_string(steps) +
              " steps charged exactly N_T_E (3 games x 4 paradigms x 2 modes); Agile trace " +
              std::to_string(trace_checked - bad_trace) + "/" + std::to_string(trace_checked) +
              " snapshots match the closed form"};
}

Verdict trend() {
  const auto config = load_experiment(kConfigs / "trend_snake.json");
  const fs::path out = scratch("trend");
  const auto t0 = Clock::now();
  const auto run = run_matrix(config, out, 1);
  const double secs = seconds_since(t0);
  fs::remove_all(out);
  const auto means = cell_means(run);
  auto score = [&](TokenCount p, Paradigm para) {
    for (const auto& [k, v] : means)
      if (k.pressure == p && k.paradigm == para) return v;
    return std::nan("");
  };
  bool ok = run.failures() == 0 && secs < kTrendSeconds;
  std::string detail;
  // Pressure tightens as N_T_E shrinks: walk from 32k down to 4k.
  const std::vector<TokenCount> loosest_first{32000, 16000, 8000, 4000};
  const double reactive_ref = score(32000, Paradigm::Reactive);
  for (std::size_t i = 0; i < loosest_first.size(); ++i) {
    const TokenCount p = loosest_first[i];
    const double re = score(p, Paradigm::Reactive), pl = score(p, Paradigm::Planning), ag = score(p, Paradigm::Agile);
    ok = ok && re == reactive_ref;
    if (i > 0) ok = ok && pl <= score(loosest_first[i - 1], Paradigm::Planning);
    ok = ok && ag >= std::max(re, pl) - kTrendAgileSlack;
    detail += (detail.empty() ? "" : "; ") + std::to_string(p / 1000) + "k R/P/A " + fmt("%.3f", re) + "/" +
              fmt("%.3f", pl) + "/" + fmt("%.3f", ag);
  }
  const double drop = score(32000, Paradigm::Planning) - score(4000, Paradigm::Planning);
  ok = ok && drop >= kTrendPlanningDrop;
  ok = ok && score(4000, Paradigm::Agile) > score(4000, Paradigm::Reactive) &&
       score(4000, Paradigm::Agile) > score(4000, Paradigm::Planning);
  return {ok, detail + "; planning drop " + fmt("%.3f", drop) + "; " + fmt("%.1f", secs) + " s"};
}

Verdict budget_sweep() {
  const auto config = load_experiment(kConfigs / "budget_sweep.json");
  const fs::path out = scratch("sweep");
  const auto run = run_matrix(config, out, 1);
  fs::remove_all(out);
  std::map<TokenCount, double> by_budget;
  for (const auto& [k, v] : cell_means(run)) by_budget[*k.agile_reactive_budget] = v;
  std::string detail;
  for (const auto& [b, v] : by_budget) detail += (detail.empty() ? "" : " ") + std::to_string(b) + ":" + fmt("%.3f", v);
  const double peak = by_budget.count(2000) ? by_budget.at(2000) : std::nan("");
  bool ok = run.failures() == 0 && by_budget.size() == 5;
  for (const auto& [b, v] : by_budget) ok = ok && v <= peak;
  ok = ok && by_budget[500] < peak && by_budget[8000] < peak;
  return {ok, "N_T_R -> score " + detail + " (" + std::string(to_string(config.agent.throughput)) + ")"};
}

Verdict statistics() {
  const std::vector<double> d{0.1, 0.2, 0.3};
  const auto r = paired_t_test(d);
  const double oracle_p = boost::math::cdf(boost::math::complement(boost::math::students_t(2.0), r.t));
  bool ok = std::abs(r.t - 3.4641016) <= kTStatTol && r.p > 0.03 && r.p < 0.04 && std::abs(r.p - oracle_p) <= kOracleTol;
  rtgym::testing::Gen gen(1000);
  int invariant = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = gen.range(2, 40);
    std::vector<double> a(n), b(n), a2(n), b2(n);
    const double shift = gen.real(-100, 100);
    for (int k = 0; k < n; ++k) {
      a[k] = gen.real(-1, 2);
      b[k] = gen.real(-1, 2);
      a2[k] = a[k] + shift;
      b2[k] = b[k] + shift;
    }
    const auto x = paired_t_test(a, b), y = paired_t_test(a2, b2);
    invariant += std::abs(x.t - y.t) <= 1e-9 * std::max(1.0, std::abs(x.t)) && std::abs(x.p - y.p) <= 1e-9;
  }
  ok = ok && invariant == 1000;
  return {ok, "t=" + fmt("%.7f", r.t) + " p=" + fmt("%.6f", r.p) + " (boost " + fmt("%.6f", oracle_p) +
                  "); translation invariance " + std::to_string(invariant) + "/1000"};
}

Verdict calibration() {
  std::vector<std::pair<double, double>> samples;
  for (int n = 500; n <= 32000; n += 500) samples.emplace_back(n, 0.0473 * n + 334.55);
  const auto m = fit_walltime(samples);
  const double ea = std::abs(m.alpha - 0.0473) / 0.0473, eb = std::abs(m.beta - 334.55) / 334.55;
  const double secs = tokens_to_seconds({0.047, 334.55, 1.0}, 8000, false);
  const bool ok = ea <= kFitRelTol && eb <= kFitRelTol && std::abs(m.r_squared - 1.0) <= kRSquaredTol && secs == 376.0;
  return {ok, "alpha rel err " + fmt("%.2e", ea) + ", beta rel err " + fmt("%.2e", eb) + ", R^2 " +
                  fmt("%.15f", m.r_squared) + ", 8000 tokens at 0.047 s = " + fmt("%.6f", secs) + " s"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"determinism", determinism},           {"freeway-semantics", freeway_semantics},
      {"difficulty-banding", banding},        {"oracle-upper-bounds", oracle_bounds},
      {"clock-accounting", clock_accounting}, {"trend-reproduction", trend},
      {"budget-sweep-shape", budget_sweep},   {"statistics", statistics},
      {"walltime-calibration", calibration},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
