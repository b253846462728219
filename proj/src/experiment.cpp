#include "rtgym/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "rtgym/error.hpp"
#include "rtgym/prompt.hpp"
#include "rtgym/synthetic.hpp"

#ifndef RTGYM_VERSION
#define RTGYM_VERSION "unknown"
#endif
#ifndef RTGYM_POLICY_DIR
#define RTGYM_POLICY_DIR "policies"
#endif

namespace rtgym {

namespace fs = std::filesystem;
using nlohmann::json;

std::string code_version() { return RTGYM_VERSION; }

std::string_view to_string(RunMode mode) { return mode == RunMode::Live ? "live" : "simulate"; }

RunMode parse_run_mode(std::string_view text) {
  if (text == "simulate" || text == "sim") return RunMode::Simulate;
  if (text == "live") return RunMode::Live;
  throw Error(ErrorCode::Config, "unknown mode '" + std::string(text) + "'");
}

namespace {

template <class T, class Parse>
std::vector<T> list_of(const json& j, const char* key, std::vector<T> fallback, Parse parse) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array()) throw Error(ErrorCode::Config, std::string(key) + " must be a list");
  std::vector<T> out;
  for (const auto& e : v) out.push_back(parse(e));
  return out;
}

// Seeds are given either as an explicit list or as a count meaning 0..n-1.
std::vector<std::uint64_t> seeds_of(const json& j, const char* key, std::uint64_t default_count) {
  std::vector<std::uint64_t> out;
  if (j.contains(key) && j.at(key).is_array()) {
    for (const auto& e : j.at(key)) out.push_back(e.get<std::uint64_t>());
    return out;
  }
  const std::uint64_t n = j.contains(key) ? j.at(key).get<std::uint64_t>() : default_count;
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(i);
  return out;
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

ReplanTrigger parse_replan(const json& j) {
  ReplanTrigger r;
  if (j.is_string()) {
    if (j.get<std::string>() != "on_plan_exhausted")
      throw Error(ErrorCode::Config, "replan must be \"on_plan_exhausted\" or {\"every_k_steps\": k}");
    return r;
  }
  if (j.is_object() && j.contains("every_k_steps")) {
    r.kind = ReplanTrigger::Kind::EveryKSteps;
    r.k = j.at("every_k_steps").get<int>();
    return r;
  }
  throw Error(ErrorCode::Config, "replan must be \"on_plan_exhausted\" or {\"every_k_steps\": k}");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::unique_ptr<Reasoner> make_reasoner(const ExperimentConfig& config, const json& spec, GameId game,
                                        ReasonerRole role) {
  const std::string kind = spec.value("kind", std::string());
  if (kind == "oracle") {
    OracleConfig oc;
    oc.cost = spec.value("cost", TokenCount{0});
    oc.jitter = spec.value("jitter", TokenCount{0});
    oc.snake_depth = spec.value("snake_depth", oc.snake_depth);
    oc.plan_length = spec.value("plan_length", oc.plan_length);
    oc.guided = spec.value("guided", false);
    if (role == ReasonerRole::Policy) {
      fs::path file = fs::path(RTGYM_POLICY_DIR) / (std::string(to_string(game)) + ".py");
      if (spec.contains("policy_files") && spec.at("policy_files").contains(std::string(to_string(game))))
        file = resolve(config.base_dir, spec.at("policy_files").at(std::string(to_string(game))).get<std::string>());
      oc.policy_source = read_text(file);
    }
    return std::make_unique<OracleReasoner>(game, role, oc);
  }
  if (kind == "mock") {
    auto call = [](const json& c) {
      return ScriptedCall{c.value("tokens_before_answer", TokenCount{0}), c.value("answer", std::string())};
    };
    ScriptedBehavior b;
    b.fallback = call(spec);
    if (spec.contains("schedule"))
      for (const auto& c : spec.at("schedule")) b.schedule.push_back(call(c));
    return std::make_unique<MockReasoner>(b);
  }
  if (kind == "fixture") {
    std::vector<fs::path> files;
    for (const auto& f : spec.at("files")) files.push_back(resolve(config.base_dir, f.get<std::string>()));
    return std::make_unique<FixtureReasoner>(files);
  }
  if (kind == "llm") {
    if (config.mode != RunMode::Live) throw Error(ErrorCode::Config, "llm reasoners need --mode live");
    if (!config.llm) throw Error(ErrorCode::Config, "llm reasoner configured without an \"llm\" endpoint");
    LlmEndpoint e = *config.llm;
    if (spec.contains("model")) e.model = spec.at("model").get<std::string>();
    if (spec.contains("sampling")) e.sampling.update(spec.at("sampling"));
    return std::make_unique<LlmReasoner>(e);
  }
  throw Error(ErrorCode::Config, "unknown reasoner kind '" + kind + "'");
}

const json* reasoner_spec(const ExperimentConfig& c, const char* slot) {
  if (c.reasoners.contains(slot)) return &c.reasoners.at(slot);
  return nullptr;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
  ExperimentConfig c;
  c.base_dir = base_dir;
  try {
    c.run_id = j.value("run_id", c.run_id);
    c.mode = parse_run_mode(j.value("mode", std::string("simulate")));
    c.games = list_of<GameId>(j, "games", {GameId::Freeway, GameId::Snake, GameId::Overcooked},
                              [](const json& e) { return parse_game(e.get<std::string>()); });
    c.difficulties = list_of<Difficulty>(j, "difficulties", {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard},
                                         [](const json& e) { return parse_difficulty(e.get<std::string>()); });
    c.pressures = list_of<TokenCount>(j, "pressures", {4000, 8000, 16000, 32000},
                                      [](const json& e) { return e.get<TokenCount>(); });
    c.paradigms = list_of<Paradigm>(
        j, "paradigms", {Paradigm::Reactive, Paradigm::Planning, Paradigm::CodePolicy, Paradigm::Agile},
        [](const json& e) { return parse_paradigm(e.get<std::string>()); });
    c.game_seeds = seeds_of(j, "game_seeds", 8);
    c.sampling_seeds = seeds_of(j, "sampling_seeds", 4);
    c.env = j.value("env", json::object());

    const json agent = j.value("agent", json::object());
    if (agent.contains("reactive_budget")) c.agent.reactive_budget = agent.at("reactive_budget").get<TokenCount>();
    else c.agent.reactive_budget = 0;  // 0: the step budget of each cell
    if (agent.contains("agile_reactive_budget")) {
      const auto& v = agent.at("agile_reactive_budget");
      if (v.is_array())
        for (const auto& e : v) c.agile_reactive_budgets.push_back(e.get<TokenCount>());
      else
        c.agile_reactive_budgets.push_back(v.get<TokenCount>());
    } else {
      c.agile_reactive_budgets.push_back(c.agent.agile_reactive_budget);
    }
    if (agent.contains("throughput")) c.agent.throughput = parse_throughput(agent.at("throughput").get<std::string>());
    if (agent.contains("replan")) c.agent.replan = parse_replan(agent.at("replan"));
    if (agent.contains("abandon_plan_after_steps") && !agent.at("abandon_plan_after_steps").is_null())
      c.agent.abandon_plan_after_steps = agent.at("abandon_plan_after_steps").get<int>();

    c.reasoners = j.value("reasoners", json::object());
    if (j.contains("llm")) c.llm = j.at("llm").get<LlmEndpoint>();
    if (j.contains("templates")) c.templates = resolve(base_dir, j.at("templates").get<std::string>());
    if (j.contains("policy_host")) {
      const auto& p = j.at("policy_host");
      c.policy_host.python = p.value("python", c.policy_host.python);
      if (p.contains("host_script")) c.policy_host.host_script = resolve(base_dir, p.at("host_script").get<std::string>());
      c.policy_host.line_budget = p.value("line_budget", c.policy_host.line_budget);
      c.policy_host.deadline_ms = p.value("deadline_ms", c.policy_host.deadline_ms);
      c.policy_host.site_packages = p.value("site_packages", c.policy_host.site_packages);
    }
    c.policy_host.live = c.mode == RunMode::Live;
    if (j.contains("walltime_model")) c.walltime_model = resolve(base_dir, j.at("walltime_model").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("malformed config: ") + e.what());
  }
  return c;
}

json ExperimentConfig::to_json() const {
  json j;
  j["run_id"] = run_id;
  j["mode"] = to_string(mode);
  for (auto g : games) j["games"].push_back(rtgym::to_string(g));
  for (auto d : difficulties) j["difficulties"].push_back(rtgym::to_string(d));
  j["pressures"] = pressures;
  for (auto p : paradigms) j["paradigms"].push_back(rtgym::to_string(p));
  j["game_seeds"] = game_seeds;
  j["sampling_seeds"] = sampling_seeds;
  j["env"] = env;
  json agent = {{"throughput", rtgym::to_string(this->agent.throughput)}};
  if (this->agent.reactive_budget != 0) agent["reactive_budget"] = this->agent.reactive_budget;
  agent["agile_reactive_budget"] = agile_reactive_budgets.size() == 1 ? json(agile_reactive_budgets.front())
                                                                      : json(agile_reactive_budgets);
  agent["replan"] = this->agent.replan.kind == ReplanTrigger::Kind::OnPlanExhausted
                        ? json("on_plan_exhausted")
                        : json{{"every_k_steps", this->agent.replan.k}};
  if (this->agent.abandon_plan_after_steps) agent["abandon_plan_after_steps"] = *this->agent.abandon_plan_after_steps;
  j["agent"] = agent;
  j["reasoners"] = reasoners;
  if (llm) j["llm"] = *llm;
  if (!templates.empty()) j["templates"] = templates.string();
  j["policy_host"] = policy_host.describe();
  if (walltime_model) j["walltime_model"] = walltime_model->string();
  return j;
}

void ExperimentConfig::validate() const {
  auto nonempty = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::Config, std::string(what) + " must not be empty");
  };
  nonempty(!games.empty(), "games");
  nonempty(!difficulties.empty(), "difficulties");
  nonempty(!pressures.empty(), "pressures");
  nonempty(!paradigms.empty(), "paradigms");
  nonempty(!game_seeds.empty(), "game_seeds");
  nonempty(!sampling_seeds.empty(), "sampling_seeds");
  nonempty(!agile_reactive_budgets.empty(), "agile_reactive_budget");
  if (run_id.empty() || run_id.find('/') != std::string::npos || run_id == "." || run_id == "..")
    throw Error(ErrorCode::Config, "run_id must be a plain directory name");

  auto has = [&](Paradigm p) { return std::find(paradigms.begin(), paradigms.end(), p) != paradigms.end(); };
  auto need = [&](const char* slot) {
    if (!reasoner_spec(*this, slot)) throw Error(ErrorCode::Config, std::string("reasoners.") + slot + " is required");
  };
  if (has(Paradigm::Reactive) || has(Paradigm::Agile)) need("reactive");
  if (has(Paradigm::Planning) || has(Paradigm::Agile)) need("planning");
  if (has(Paradigm::CodePolicy) && !reasoner_spec(*this, "policy")) need("planning");

  bool uses_llm = false;
  for (const auto& [slot, spec] : reasoners.items()) {
    const std::string kind = spec.value("kind", std::string());
    if (kind != "oracle" && kind != "mock" && kind != "fixture" && kind != "llm")
      throw Error(ErrorCode::Config, "reasoners." + slot + ": unknown kind '" + kind + "'");
    uses_llm |= kind == "llm";
  }
  if (mode == RunMode::Simulate && uses_llm)
    throw Error(ErrorCode::Config, "simulate mode cannot use llm reasoners (no network in simulation)");
  if (mode == RunMode::Live) {
    if (!llm) throw Error(ErrorCode::Config, "live mode needs an \"llm\" endpoint section");
    llm->validate();
  }

  for (const auto& e : expand_matrix(*this)) {
    episode_env(*this, e).validate();
    cell_agent(*this, e.cell).validate();
  }
}

std::string CellKey::name() const {
  std::string n = std::string(to_string(difficulty)) + "-" + std::to_string(pressure) + "-" +
                  std::string(to_string(paradigm));
  if (agile_reactive_budget) n += "-r" + std::to_string(*agile_reactive_budget);
  return n;
}

fs::path CellKey::dir() const { return fs::path(std::string(to_string(game))) / name(); }

fs::path EpisodeKey::file() const {
  return cell.dir() / ("episode-" + std::to_string(game_seed) + "-" + std::to_string(sampling_seed) + ".jsonl");
}

std::vector<EpisodeKey> expand_matrix(const ExperimentConfig& c) {
  std::vector<EpisodeKey> out;
  const bool sweep = c.agile_reactive_budgets.size() > 1;
  for (auto g : c.games)
    for (auto d : c.difficulties)
      for (auto p : c.pressures)
        for (auto para : c.paradigms) {
          std::vector<std::optional<TokenCount>> budgets = {std::nullopt};
          if (para == Paradigm::Agile && sweep) {
            budgets.clear();
            for (auto b : c.agile_reactive_budgets) budgets.push_back(b);
          }
          for (const auto& b : budgets)
            for (auto gs : c.game_seeds)
              for (auto ss : c.sampling_seeds) out.push_back({CellKey{g, d, p, para, b}, gs, ss});
        }
  return out;
}

EnvConfig episode_env(const ExperimentConfig& c, const EpisodeKey& key) {
  json j = c.env;
  j["game"] = to_string(key.cell.game);
  j["difficulty"] = to_string(key.cell.difficulty);
  j["seed"] = key.game_seed;
  try {
    return j.get<EnvConfig>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("malformed env section: ") + e.what());
  }
}

AgentConfig cell_agent(const ExperimentConfig& c, const CellKey& cell) {
  AgentConfig a = c.agent;
  a.paradigm = cell.paradigm;
  a.step_budget = cell.pressure;
  // The reactive cutoff never exceeds the step it has to fit in.
  a.reactive_budget = c.agent.reactive_budget == 0 ? cell.pressure : std::min(c.agent.reactive_budget, cell.pressure);
  a.agile_reactive_budget = cell.agile_reactive_budget.value_or(c.agile_reactive_budgets.front());
  return a;
}

std::size_t RunResult::failures() const {
  return static_cast<std::size_t>(std::count_if(episodes.begin(), episodes.end(), [](const auto& e) { return !e.ok; }));
}

Trajectory run_matrix_episode(const ExperimentConfig& config, const EpisodeKey& key) {
  static std::mutex prompt_mu;
  static std::map<fs::path, std::shared_ptr<const PromptLibrary>> prompt_cache;
  std::shared_ptr<const PromptLibrary> prompts;
  if (!config.templates.empty()) {
    std::lock_guard lock(prompt_mu);
    auto& slot = prompt_cache[config.templates];
    if (!slot) slot = std::make_shared<PromptLibrary>(PromptLibrary::from_directory(config.templates));
    prompts = slot;
  }

  const GameId game = key.cell.game;
  std::unique_ptr<Reasoner> reactive, planner;
  switch (key.cell.paradigm) {
    case Paradigm::Reactive:
      reactive = make_reasoner(config, *reasoner_spec(config, "reactive"), game, ReasonerRole::Action);
      break;
    case Paradigm::Planning:
      planner = make_reasoner(config, *reasoner_spec(config, "planning"), game, ReasonerRole::Plan);
      break;
    case Paradigm::CodePolicy: {
      const json* spec = reasoner_spec(config, "policy");
      planner = make_reasoner(config, spec ? *spec : *reasoner_spec(config, "planning"), game, ReasonerRole::Policy);
      break;
    }
    case Paradigm::Agile:
      reactive = make_reasoner(config, *reasoner_spec(config, "reactive"), game, ReasonerRole::Action);
      planner = make_reasoner(config, *reasoner_spec(config, "planning"), game, ReasonerRole::Plan);
      break;
  }

  EpisodeContext ctx;
  ctx.sampling_seed = key.sampling_seed;
  ctx.prompts = prompts.get();
  ctx.policy_host = config.policy_host;
  return run_episode(episode_env(config, key), cell_agent(config, key.cell), {reactive.get(), planner.get()}, ctx);
}

RunResult run_matrix(const ExperimentConfig& config, const fs::path& out_root, int jobs) {
  config.validate();
  const auto episodes = expand_matrix(config);
  RunResult result;
  result.dir = out_root / config.run_id;
  std::error_code ec;
  fs::create_directories(result.dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + result.dir.string() + ": " + ec.message());

  // The manifest lists every expected episode so reports can tell a
  // partial run from a complete one.
  json manifest = {{"schema_version", 1},
                   {"run_id", config.run_id},
                   {"code_version", code_version()},
                   {"trajectory_schema_version", kTrajectorySchemaVersion},
                   {"config", config.to_json()}};
  json cells = json::array();
  std::optional<CellKey> last;
  for (const auto& e : episodes) {
    if (last && *last == e.cell) continue;
    last = e.cell;
    json cell = {{"game", to_string(e.cell.game)},
                 {"difficulty", to_string(e.cell.difficulty)},
                 {"pressure", e.cell.pressure},
                 {"paradigm", to_string(e.cell.paradigm)},
                 {"dir", e.cell.dir().string()}};
    cell["agile_reactive_budget"] =
        e.cell.paradigm == Paradigm::Agile ? json(cell_agent(config, e.cell).agile_reactive_budget) : json();
    cells.push_back(cell);
  }
  manifest["cells"] = cells;
  manifest["episodes_per_cell"] = config.game_seeds.size() * config.sampling_seeds.size();
  manifest["episodes"] = episodes.size();
  {
    std::ofstream m(result.dir / "manifest.json");
    if (!m) throw Error(ErrorCode::Io, "cannot write manifest in " + result.dir.string());
    m << manifest.dump(2) << '\n';
  }

  result.episodes.resize(episodes.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < episodes.size(); i = next++) {
      EpisodeSummary& s = result.episodes[i];
      s.key = episodes[i];
      try {
        const Trajectory t = run_matrix_episode(config, episodes[i]);
        const fs::path file = result.dir / episodes[i].file();
        fs::create_directories(file.parent_path());
        save_trajectory(file, t);
        s.ok = true;
        s.final_reward = t.final_reward;
        s.score = t.score;
        s.default_steps = static_cast<int>(std::count_if(
            t.steps.begin(), t.steps.end(), [](const StepRecord& r) { return r.source == ActionSource::Default; }));
        s.incidents = t.incidents.size();
      } catch (const std::exception& e) {
        s.ok = false;
        s.error = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(episodes.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ofstream csv(result.dir / "summary.csv");
  if (!csv) throw Error(ErrorCode::Io, "cannot write summary in " + result.dir.string());
  csv << "game,difficulty,pressure,paradigm,agile_reactive_budget,game_seed,sampling_seed,status,final_reward,score,"
         "default_steps,incidents,file,error\n";
  for (const auto& s : result.episodes) {
    const CellKey& c = s.key.cell;
    const std::string ntr =
        c.paradigm == Paradigm::Agile ? std::to_string(cell_agent(config, c).agile_reactive_budget) : "";
    csv << to_string(c.game) << ',' << to_string(c.difficulty) << ',' << c.pressure << ',' << to_string(c.paradigm)
        << ',' << ntr << ',' << s.key.game_seed << ',' << s.key.sampling_seed << ',' << (s.ok ? "ok" : "failed") << ','
        << fmt_double(s.final_reward) << ',' << fmt_double(s.score) << ',' << s.default_steps << ',' << s.incidents
        << ',' << s.key.file().string() << ',' << csv_field(s.error) << '\n';
  }
  return result;
}

ExperimentConfig load_experiment(const fs::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open config " + path.string());
  json j = json::parse(in, nullptr, false, true);
  if (j.is_discarded()) throw Error(ErrorCode::Config, "config " + path.string() + " is not valid JSON");
  for (const auto& o : overrides) apply_override(j, o);
  return ExperimentConfig::from_json(j, fs::absolute(path).parent_path());
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorCode::Config, "override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error(ErrorCode::Config, "override key '" + key + "' has an empty segment");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

}  // namespace rtgym
