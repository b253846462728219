#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rtgym {

enum class ErrorCode {
  Config,
  DegenerateFit,
  GenerationExhausted,
  SteppedAfterDone,
  Unreachable,
  ReasonerFailure,
  PolicyCrash,
  EmptyCell,
  DegenerateVariance,
  SchemaMismatch,
  Divergence,
  IncompleteRun,
  Io,
};

std::string_view to_string(ErrorCode code);

// Every failure the library reports carries a code so callers (and the CLI's
// exit status mapping) can dispatch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Divergence carries the index of the first transition that did not reproduce.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, const std::string& message)
      : Error(ErrorCode::Divergence, "step " + std::to_string(step) + ": " + message),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace rtgym
