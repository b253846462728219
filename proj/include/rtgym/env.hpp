#pragma once

#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "rtgym/types.hpp"

namespace rtgym {

struct StepOutcome {
  double reward = 0;
  bool done = false;
};

// Type-erased handle over one game's state value. Copies are cheap enough to
// use as snapshots (clone()).
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvConfig& config() const = 0;
  GameId game() const { return config().game; }

  virtual std::unique_ptr<Environment> clone() const = 0;

  virtual StepOutcome step(Action action) = 0;
  virtual Action default_action() const = 0;

  virtual bool done() const = 0;
  virtual int turn() const = 0;
  virtual double total_reward() const = 0;

  // The banded difficulty measure: S, N, or L.
  virtual int cognitive_load() const = 0;

  // Complete state; the digest and replay are defined over it. Views are
  // built lazily and kept until the next step.
  virtual const nlohmann::json& state_json() const = 0;
  // Agent-facing view in the shape code policies consume.
  virtual const nlohmann::json& observation_json() const = 0;

  virtual const std::string& digest() const = 0;
};

// Deterministic reset; throws Config or GenerationExhausted.
std::unique_ptr<Environment> make_environment(const EnvConfig& config);

// 16 hex digits of FNV-1a over the canonical JSON dump.
std::string state_digest(const nlohmann::json& state);

}  // namespace rtgym
