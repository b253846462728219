#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "rtgym/types.hpp"

namespace rtgym {

struct PolicyHostConfig {
  std::string python = "python3";
  std::filesystem::path host_script;  // empty: the copy shipped with the sources
  bool live = false;
  bool site_packages = false;     // off: python -S
  long line_budget = 200000;      // simulation deadline, executed Python lines
  int deadline_ms = 1000;         // live deadline
  int io_timeout_ms = 20000;      // backstop on any single read

  nlohmann::json describe() const;
};

std::filesystem::path default_policy_host();

// A warm interpreter that forks one child per policy. Idle hosts are pooled
// per configuration and reused; see tools/policy_host.py for the protocol.
class PolicyHost;

// One policy program running in a child interpreter. Construction performs
// the health check; a failed check or a dead child throws PolicyCrash.
class PolicyProcess {
 public:
  PolicyProcess(const PolicyHostConfig& config, const std::string& source);
  ~PolicyProcess();
  PolicyProcess(const PolicyProcess&) = delete;
  PolicyProcess& operator=(const PolicyProcess&) = delete;

  enum class Outcome { Action, Timeout, ParseFailure };
  struct Reply {
    Outcome outcome = Outcome::ParseFailure;
    Action action = Action::Stay;
    std::string detail;
  };

  // Throws PolicyCrash when the child dies or reports an exception.
  Reply call(GameId game, const nlohmann::json& observation, int turn);

 private:
  // Marks the policy dead and hands the host back if it is still in sync.
  [[noreturn]] void die(const std::string& why, bool host_in_sync);
  void release();

  std::unique_ptr<PolicyHost> host_;
  bool alive_ = false;
  PolicyHostConfig config_;
};

// Number of idle hosts currently pooled (all configurations).
std::size_t pooled_policy_hosts();

}  // namespace rtgym
