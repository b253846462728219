#include "rtgym/report.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "rtgym/error.hpp"
#include "rtgym/experiment.hpp"
#include "rtgym/stats.hpp"

namespace rtgym {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

namespace {

struct Row {
  std::uint64_t game_seed = 0;
  bool ok = false;
  double reward = 0;
  double score = 0;
  std::string file;
};

std::string fmt(double v, const char* f = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Row label inside a (game, difficulty, pressure) block.
std::string label(const CellKey& c) {
  std::string s(to_string(c.paradigm));
  if (c.agile_reactive_budget) s += "-r" + std::to_string(*c.agile_reactive_budget);
  return s;
}

class Writer {
 public:
  Writer(const fs::path& dir, const std::string& name, std::vector<fs::path>& written)
      : path_(dir / name), out_(path_) {
    if (!out_) throw Error(ErrorCode::Io, "cannot write " + path_.string());
    written.push_back(path_);
  }
  std::ofstream& operator*() { return out_; }

 private:
  fs::path path_;
  std::ofstream out_;
};

}  // namespace

std::vector<fs::path> write_report(const fs::path& run_dir, fs::path out_dir) {
  if (out_dir.empty()) out_dir = run_dir / "report";
  std::ifstream mf(run_dir / "manifest.json");
  if (!mf) throw Error(ErrorCode::IncompleteRun, "no manifest.json in " + run_dir.string());
  const json manifest = json::parse(mf, nullptr, false);
  if (manifest.is_discarded() || !manifest.contains("config"))
    throw Error(ErrorCode::SchemaMismatch, "manifest.json in " + run_dir.string() + " is malformed");
  const ExperimentConfig config = ExperimentConfig::from_json(manifest.at("config"));
  const auto expected = expand_matrix(config);

  std::map<std::string, Row> rows;  // by episode file
  if (std::ifstream sf(run_dir / "summary.csv"); sf) {
    std::string line;
    std::getline(sf, line);
    const auto header = split_csv_line(line);
    auto col = [&](const char* name) {
      for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
      throw Error(ErrorCode::SchemaMismatch, std::string("summary.csv lacks column ") + name);
    };
    const auto c_seed = col("game_seed"), c_status = col("status"), c_reward = col("final_reward"),
               c_score = col("score"), c_file = col("file");
    while (std::getline(sf, line)) {
      if (line.empty()) continue;
      const auto f = split_csv_line(line);
      if (f.size() < header.size()) throw Error(ErrorCode::SchemaMismatch, "short summary.csv row: " + line);
      Row r;
      r.game_seed = std::stoull(f[c_seed]);
      r.ok = f[c_status] == "ok";
      r.reward = std::stod(f[c_reward]);
      r.score = std::stod(f[c_score]);
      r.file = f[c_file];
      rows[r.file] = r;
    }
  }

  // Group expected episodes by cell, noting what is missing.
  std::map<CellKey, std::vector<const Row*>> cells;
  std::set<std::string> missing;
  for (const auto& e : expected) {
    auto it = rows.find(e.file().string());
    if (it == rows.end() || (it->second.ok && !fs::exists(run_dir / e.file()))) {
      missing.insert(e.cell.dir().string());
      continue;
    }
    cells[e.cell].push_back(&it->second);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::IncompleteRun, "missing episodes in: " + list);
  }

  fs::create_directories(out_dir);
  std::vector<fs::path> written;

  struct CellStats {
    std::size_t episodes = 0, failed = 0;
    std::optional<double> score, reward;
    std::map<std::uint64_t, std::vector<double>> by_seed;
  };
  std::map<CellKey, CellStats> stats;
  for (const auto& [cell, list] : cells) {
    CellStats s;
    std::vector<double> scores, rewards;
    for (const Row* r : list) {
      ++s.episodes;
      if (!r->ok) {
        ++s.failed;
        continue;
      }
      scores.push_back(r->score);
      rewards.push_back(r->reward);
      s.by_seed[r->game_seed].push_back(r->score);
    }
    if (s.failed == 0 && !scores.empty()) {
      s.score = mean(scores);
      s.reward = mean(rewards);
    }
    stats[cell] = s;
  }
  auto cell_value = [&](const CellKey& c) {
    const auto& s = stats.at(c);
    return s.score ? fmt(*s.score) : std::string("failed");
  };

  {
    Writer w(out_dir, "scores.csv", written);
    *w << "game,difficulty,pressure,paradigm,agile_reactive_budget,episodes,failed,mean_score,mean_reward\n";
    for (const auto& [c, s] : stats) {
      const std::string ntr =
          c.paradigm == Paradigm::Agile ? std::to_string(cell_agent(config, c).agile_reactive_budget) : "";
      *w << to_string(c.game) << ',' << to_string(c.difficulty) << ',' << c.pressure << ',' << to_string(c.paradigm)
         << ',' << ntr << ',' << s.episodes << ',' << s.failed << ',' << (s.score ? fmt(*s.score) : "") << ','
         << (s.reward ? fmt(*s.reward) : "") << '\n';
    }
  }

  // Per-game grids: one row per paradigm, one column per difficulty@pressure.
  for (GameId g : config.games) {
    Writer w(out_dir, "grid_" + std::string(to_string(g)) + ".csv", written);
    *w << "paradigm";
    for (auto d : config.difficulties)
      for (auto p : config.pressures) *w << ',' << to_string(d) << '@' << p;
    *w << '\n';
    std::vector<CellKey> row_keys;
    for (const auto& [c, s] : stats)
      if (c.game == g && c.difficulty == config.difficulties.front() && c.pressure == config.pressures.front())
        row_keys.push_back(c);
    for (const CellKey& rk : row_keys) {
      *w << label(rk);
      for (auto d : config.difficulties)
        for (auto p : config.pressures) {
          CellKey c = rk;
          c.difficulty = d;
          c.pressure = p;
          *w << ',' << cell_value(c);
        }
      *w << '\n';
    }
  }

  // Paired one-sided tests, pairing on the game seed (sampling seeds averaged).
  {
    Writer w(out_dir, "pvalues.csv", written);
    *w << "game,difficulty,pressure,a,b,n,t,p\n";
    for (GameId g : config.games) {
      Writer grid(out_dir, "pvalue_grid_" + std::string(to_string(g)) + ".csv", written);
      bool header_done = false;
      for (auto d : config.difficulties)
        for (auto p : config.pressures) {
          std::vector<CellKey> block;
          for (const auto& [c, s] : stats)
            if (c.game == g && c.difficulty == d && c.pressure == p) block.push_back(c);
          if (!header_done) {
            *grid << "difficulty,pressure,row";
            for (const auto& c : block) *grid << ',' << label(c);
            *grid << '\n';
            header_done = true;
          }
          for (const auto& a : block) {
            *grid << to_string(d) << ',' << p << ',' << label(a);
            for (const auto& b : block) {
              std::string cell_p;
              if (!(a == b)) {
                const auto& sa = stats.at(a);
                const auto& sb = stats.at(b);
                std::vector<double> da, db;
                for (const auto& [seed, v] : sa.by_seed) {
                  auto it = sb.by_seed.find(seed);
                  if (it == sb.by_seed.end()) continue;
                  da.push_back(mean(v));
                  db.push_back(mean(it->second));
                }
                std::string t_s, p_s;
                if (sa.failed == 0 && sb.failed == 0) {
                  try {
                    const auto r = paired_t_test(da, db);
                    t_s = fmt(r.t);
                    p_s = fmt(r.p, "%.6g");
                  } catch (const Error&) {
                    t_s = p_s = "degenerate";
                  }
                } else {
                  t_s = p_s = "failed";
                }
                *w << to_string(g) << ',' << to_string(d) << ',' << p << ',' << label(a) << ',' << label(b) << ','
                   << da.size() << ',' << t_s << ',' << p_s << '\n';
                cell_p = p_s;
              }
              *grid << ',' << cell_p;
            }
            *grid << '\n';
          }
        }
    }
  }

  // Natural (untruncated) reactive token usage, per game.
  // Alongside it, Agile per-turn lane usage averaged over a cell's episodes.
  std::map<GameId, CdfTable> cdfs;
  {
    std::map<GameId, std::vector<TokenCount>> counts;
    struct TurnSums {
      double reactive = 0, planning = 0, trace = 0;
      int n = 0;
    };
    std::map<std::pair<CellKey, int>, TurnSums> turns;
    for (const auto& [c, list] : cells) {
      if (c.paradigm != Paradigm::Reactive && c.paradigm != Paradigm::Agile) continue;
      for (const Row* r : list) {
        if (!r->ok) continue;
        const Trajectory t = load_trajectory(run_dir / r->file);
        for (const auto& s : t.steps) {
          if (s.tokens.natural) counts[c.game].push_back(*s.tokens.natural);
          if (c.paradigm != Paradigm::Agile) continue;
          auto& ts = turns[{c, s.turn}];
          ts.reactive += static_cast<double>(s.tokens.reactive);
          ts.planning += static_cast<double>(s.tokens.planning);
          ts.trace += static_cast<double>(s.tokens.trace.value_or(0));
          ++ts.n;
        }
      }
    }
    Writer tw(out_dir, "plot_token_trace.csv", written);
    *tw << "game,cell,turn,episodes,mean_reactive,mean_planning,mean_trace\n";
    for (const auto& [k, ts] : turns)
      *tw << to_string(k.first.game) << ',' << k.first.name() << ',' << k.second << ',' << ts.n << ','
          << fmt(ts.reactive / ts.n) << ',' << fmt(ts.planning / ts.n) << ',' << fmt(ts.trace / ts.n) << '\n';

    Writer w(out_dir, "token_cdf.csv", written);
    *w << "game,tokens,fraction\n";
    for (auto& [g, v] : counts) {
      cdfs[g] = token_usage_cdf(std::move(v));
      for (const auto& [tokens, frac] : cdfs[g]) *w << to_string(g) << ',' << tokens << ',' << fmt(frac) << '\n';
    }
  }

  {
    Writer w(out_dir, "budget_sweep.csv", written);
    *w << "game,difficulty,pressure,agile_reactive_budget,mean_score,natural_cdf_at_budget\n";
    for (const auto& [c, s] : stats) {
      if (c.paradigm != Paradigm::Agile) continue;
      const TokenCount ntr = cell_agent(config, c).agile_reactive_budget;
      const auto cdf = cdfs.find(c.game);
      *w << to_string(c.game) << ',' << to_string(c.difficulty) << ',' << c.pressure << ',' << ntr << ','
         << cell_value(c) << ',' << (cdf != cdfs.end() ? fmt(cdf_at(cdf->second, ntr)) : std::string()) << '\n';
    }
  }

  // Score against time pressure, averaged over difficulties.
  {
    Writer w(out_dir, "plot_pressure.csv", written);
    *w << "game,paradigm,pressure,mean_score\n";
    std::map<std::tuple<GameId, std::string, TokenCount>, std::vector<double>> acc;
    std::set<std::tuple<GameId, std::string, TokenCount>> failed;
    for (const auto& [c, s] : stats) {
      const auto key = std::make_tuple(c.game, label(c), c.pressure);
      if (s.score) acc[key].push_back(*s.score);
      else failed.insert(key);
    }
    for (const auto& [k, v] : acc) {
      if (failed.count(k)) continue;
      *w << to_string(std::get<0>(k)) << ',' << std::get<1>(k) << ',' << std::get<2>(k) << ',' << fmt(mean(v)) << '\n';
    }
    for (const auto& k : failed)
      *w << to_string(std::get<0>(k)) << ',' << std::get<1>(k) << ',' << std::get<2>(k) << ",failed\n";
  }
  return written;
}

}  // namespace rtgym
