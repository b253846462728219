#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rtgym/error.hpp"
#include "rtgym/experiment.hpp"
#include "rtgym/report.hpp"
#include "rtgym/token_clock.hpp"
#include "rtgym/trajectory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rtgym;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::Io:
    case ErrorCode::SchemaMismatch:
      return kConfigError;
    default:
      return kRuntimeError;
  }
}

void print_error(std::string_view code, const std::string& message, const json& extra = json::object()) {
  json j = {{"error", code}, {"message", message}};
  j.update(extra);
  std::cerr << j.dump() << std::endl;
}

int cmd_run(const std::string& config_path, const std::string& out, const std::string& mode, int jobs,
            std::vector<std::string> overrides) {
  if (!mode.empty()) overrides.push_back("mode=" + mode);
  const ExperimentConfig config = load_experiment(config_path, overrides);
  config.validate();  // live-mode key checks happen here, before any episode
  const RunResult r = run_matrix(config, out, jobs);
  json report = {{"run_dir", r.dir.string()}, {"episodes", r.episodes.size()}, {"failures", r.failures()}};
  std::cout << report.dump() << std::endl;
  if (r.failures() > 0) {
    for (const auto& e : r.episodes)
      if (!e.ok) print_error("EpisodeFailed", e.error, {{"file", e.key.file().string()}});
    return kRuntimeError;
  }
  return kOk;
}

int cmd_replay(const std::string& file) {
  const Trajectory t = load_trajectory(file);
  try {
    const ReplayReport r = replay(t);
    std::cout << json{{"status", "OK"}, {"steps", r.steps_checked}, {"final_reward", r.final_reward}}.dump()
              << std::endl;
    return kOk;
  } catch (const DivergenceError& e) {
    print_error("Divergence", e.what(), {{"step", e.step()}});
    return kRuntimeError;
  }
}

int cmd_calibrate(const std::string& samples_path, const std::string& out) {
  std::ifstream in(samples_path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + samples_path);
  std::vector<std::pair<double, double>> samples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv_line(line);
    if (f.size() < 2) throw Error(ErrorCode::Config, samples_path + ":" + std::to_string(lineno) + ": want tokens,seconds");
    try {
      samples.emplace_back(std::stod(f[0]), std::stod(f[1]));
    } catch (const std::exception&) {
      if (lineno == 1) continue;  // header
      throw Error(ErrorCode::Config, samples_path + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  const WalltimeModel m = fit_walltime(samples);
  const json j = {{"alpha", m.alpha}, {"beta", m.beta}, {"r_squared", m.r_squared}, {"samples", samples.size()}};
  std::cout.precision(17);
  std::cout << j.dump() << std::endl;
  if (!out.empty()) {
    std::ofstream o(out);
    if (!o) throw Error(ErrorCode::Io, "cannot write " + out);
    o << j.dump(2) << '\n';
  }
  return kOk;
}

int cmd_report(const std::string& dir, const std::string& out) {
  const auto files = write_report(dir, out);
  json list = json::array();
  for (const auto& f : files) list.push_back(f.string());
  std::cout << json{{"written", list}}.dump() << std::endl;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Real-time reasoning gym: run, replay, calibrate and report."};
  app.require_subcommand(1);

  std::string config_path, out_dir = "results", mode;
  int jobs = 1;
  std::vector<std::string> overrides;
  auto* run = app.add_subcommand("run", "Run an experiment matrix");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Results root; the run lands in <out>/<run_id>");
  run->add_option("--mode", mode, "simulate or live (overrides the config)")
      ->check(CLI::IsMember({"simulate", "live"}));
  run->add_option("--jobs", jobs, "Episodes run in parallel")->check(CLI::PositiveNumber);
  run->add_option("--override", overrides, "key.path=value (value parsed as JSON when it can be)");

  std::string replay_file;
  auto* rep = app.add_subcommand("replay", "Re-simulate a trajectory log and check it");
  rep->add_option("--file", replay_file, "Trajectory JSONL")->required()->check(CLI::ExistingFile);

  std::string samples, model_out;
  auto* cal = app.add_subcommand("calibrate", "Fit seconds = alpha * tokens + beta");
  cal->add_option("--samples", samples, "CSV of tokens,seconds")->required()->check(CLI::ExistingFile);
  cal->add_option("--out", model_out, "Write the fitted model as JSON");

  std::string report_dir, report_out;
  auto* rpt = app.add_subcommand("report", "Aggregate a finished run into tables");
  rpt->add_option("--dir", report_dir, "Run directory (contains manifest.json)")->required();
  rpt->add_option("--out", report_out, "Output directory (default <dir>/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir, mode, jobs, overrides);
    if (*rep) return cmd_replay(replay_file);
    if (*cal) return cmd_calibrate(samples, model_out);
    if (*rpt) return cmd_report(report_dir, report_out);
  } catch (const Error& e) {
    print_error(to_string(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    print_error("Internal", e.what());
    return kRuntimeError;
  }
  return kOk;
}
