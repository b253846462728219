#include "rtgym/policy_process.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <map>
#include <mutex>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include "rtgym/error.hpp"

extern char** environ;

#ifndef RTGYM_POLICY_HOST
#define RTGYM_POLICY_HOST "tools/policy_host.py"
#endif

namespace rtgym {

namespace {

[[noreturn]] void crash(const std::string& why) { throw Error(ErrorCode::PolicyCrash, why); }

void ignore_sigpipe_once() {
  static const bool done = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

// Same key for configurations that would spawn identical hosts.
std::string pool_key(const PolicyHostConfig& c) {
  return c.describe().dump() + '\n' + (c.host_script.empty() ? default_policy_host() : c.host_script).string();
}

}  // namespace

// The host process and its two pipe ends. Thrown-away hosts are killed as a
// process group so a forked child cannot outlive its parent.
class PolicyHost {
 public:
  explicit PolicyHost(const PolicyHostConfig& config) : io_timeout_(config.io_timeout_ms) {
    ignore_sigpipe_once();
    int in_pipe[2], out_pipe[2];
    if (pipe2(in_pipe, O_CLOEXEC) != 0) crash(std::string("pipe: ") + std::strerror(errno));
    if (pipe2(out_pipe, O_CLOEXEC) != 0) {
      close(in_pipe[0]);
      close(in_pipe[1]);
      crash(std::string("pipe: ") + std::strerror(errno));
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
    posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, "/dev/null", O_WRONLY, 0);
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);

    const std::string script = (config.host_script.empty() ? default_policy_host() : config.host_script).string();
    std::vector<std::string> args = {config.python, "-u"};
    if (!config.site_packages) args.emplace_back("-S");
    args.insert(args.end(), {script, "--mode", config.live ? "live" : "sim", "--line-budget",
                             std::to_string(config.line_budget), "--deadline-ms", std::to_string(config.deadline_ms)});
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);

    // Fixed string hashing, so set iteration order inside a policy repeats.
    std::vector<std::string> env_strings;
    for (char** e = environ; *e; ++e)
      if (std::strncmp(*e, "PYTHONHASHSEED=", 15) != 0) env_strings.emplace_back(*e);
    if (!config.live) env_strings.emplace_back("PYTHONHASHSEED=0");
    std::vector<char*> envp;
    for (auto& e : env_strings) envp.push_back(e.data());
    envp.push_back(nullptr);

    const int rc = posix_spawnp(&pid_, config.python.c_str(), &actions, &attr, argv.data(), envp.data());
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
    close(in_pipe[0]);
    close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    if (rc != 0) {
      pid_ = -1;
      kill_all();
      crash("cannot start " + config.python + ": " + std::strerror(rc));
    }
  }

  ~PolicyHost() { kill_all(); }
  PolicyHost(const PolicyHost&) = delete;
  PolicyHost& operator=(const PolicyHost&) = delete;

  void send(const nlohmann::json& message) {
    const std::string data = message.dump() + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = write(to_child_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        crash("policy host is gone");
      }
      off += static_cast<std::size_t>(n);
    }
  }

  // Throws PolicyCrash on EOF or when no full line arrives in time; the host
  // is unusable afterwards.
  nlohmann::json receive() {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(io_timeout_);
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        try {
          return nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
          crash("unparseable reply from policy host: " + line);
        }
      }
      const auto left =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) crash("policy process stopped responding");
      pollfd pfd{from_child_, POLLIN, 0};
      const int r = poll(&pfd, 1, static_cast<int>(left.count()));
      if (r <= 0) continue;
      char chunk[4096];
      const ssize_t n = read(from_child_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) crash("policy host exited");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  void kill_all() {
    if (to_child_ >= 0) close(to_child_);
    if (from_child_ >= 0) close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
      kill(-pid_, SIGKILL);
      int status = 0;
      waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  int io_timeout_;
};

namespace {

constexpr std::size_t kMaxIdlePerKey = 32;

struct HostPool {
  std::mutex mu;
  std::map<std::string, std::vector<std::unique_ptr<PolicyHost>>> idle;
};

HostPool& pool() {
  static HostPool p;
  return p;
}

std::unique_ptr<PolicyHost> acquire(const PolicyHostConfig& config) {
  {
    auto& p = pool();
    std::lock_guard lock(p.mu);
    auto& hosts = p.idle[pool_key(config)];
    if (!hosts.empty()) {
      auto h = std::move(hosts.back());
      hosts.pop_back();
      return h;
    }
  }
  return std::make_unique<PolicyHost>(config);
}

void give_back(const PolicyHostConfig& config, std::unique_ptr<PolicyHost> host) {
  auto& p = pool();
  std::lock_guard lock(p.mu);
  auto& hosts = p.idle[pool_key(config)];
  if (hosts.size() < kMaxIdlePerKey) hosts.push_back(std::move(host));
}

}  // namespace

std::size_t pooled_policy_hosts() {
  auto& p = pool();
  std::lock_guard lock(p.mu);
  std::size_t n = 0;
  for (const auto& [_, hosts] : p.idle) n += hosts.size();
  return n;
}

nlohmann::json PolicyHostConfig::describe() const {
  return {{"python", python},
          {"mode", live ? "live" : "sim"},
          {"line_budget", line_budget},
          {"deadline_ms", deadline_ms},
          {"site_packages", site_packages}};
}

std::filesystem::path default_policy_host() { return RTGYM_POLICY_HOST; }

PolicyProcess::PolicyProcess(const PolicyHostConfig& config, const std::string& source) : config_(config) {
  host_ = acquire(config);
  nlohmann::json hello;
  try {
    host_->send({{"source", source}});
    hello = host_->receive();
  } catch (...) {
    host_.reset();
    throw;
  }
  if (hello.value("ready", false)) {
    alive_ = true;
    return;
  }
  if (hello.contains("exited")) die("policy exited during its health check", true);
  const std::string why = "policy failed its health check: " + hello.value("error", std::string("?"));
  die(why, hello.contains("ready"));
}

PolicyProcess::~PolicyProcess() {
  if (!host_) return;
  if (alive_) {
    try {
      host_->send({{"end", true}});
      if (!host_->receive().value("bye", false)) {
        host_.reset();
        return;
      }
    } catch (const Error&) {
      host_.reset();
      return;
    }
  }
  release();
}

// Waits for the host's "exited" line, then pools the host.
void PolicyProcess::release() {
  try {
    if (host_->receive().contains("exited")) {
      give_back(config_, std::move(host_));
      return;
    }
  } catch (const Error&) {
  }
  host_.reset();
}

void PolicyProcess::die(const std::string& why, bool host_in_sync) {
  alive_ = false;
  if (host_in_sync)
    release();
  else
    host_.reset();
  crash(why);
}

PolicyProcess::Reply PolicyProcess::call(GameId game, const nlohmann::json& observation, int turn) {
  if (!alive_ || !host_) crash("policy process is not running");
  nlohmann::json j;
  try {
    host_->send({{"state", observation}, {"turn", turn}});
    j = host_->receive();
  } catch (const Error&) {
    alive_ = false;
    host_.reset();
    throw;
  }
  Reply reply;
  if (j.contains("exited")) {
    // Child gone without a reply; the host already reported and is idle.
    alive_ = false;
    give_back(config_, std::move(host_));
    crash("policy process exited with status " + j.at("exited").dump());
  }
  if (j.contains("error")) die("policy raised " + j.at("error").get<std::string>(), true);
  if (j.value("timeout", false)) {
    reply.outcome = Outcome::Timeout;
    reply.detail = "policy exceeded its per-call deadline";
    return reply;
  }
  if (j.contains("action") && j.at("action").is_string()) {
    const auto text = j.at("action").get<std::string>();
    if (const auto a = parse_action(game, text)) {
      reply.outcome = Outcome::Action;
      reply.action = *a;
      return reply;
    }
    reply.detail = "action '" + text + "' not in the game's alphabet";
    return reply;
  }
  reply.detail = "reply has no action: " + j.dump();
  return reply;
}

}  // namespace rtgym
