#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "rtgym/reasoner.hpp"

namespace rtgym {

// Prompt templates are plain text files with {{slot}} placeholders:
//   {{game}} {{rules}} {{turn}} {{observation}} {{state}} {{guidance}} {{budget}}
// {{observation}} is what a policy program receives; {{state}} is the full
// internal state.
// Files: <dir>/<role>.txt and <dir>/rules_<game>.txt. Missing files fall
// back to short built-in texts.
class PromptLibrary {
 public:
  PromptLibrary();  // built-ins only
  static PromptLibrary from_directory(const std::filesystem::path& dir);

  std::string render(const ReasonerRequest& request) const;

  const std::string& role_template(ReasonerRole role) const;
  const std::string& rules(GameId game) const;

 private:
  std::map<std::string, std::string> texts_;
};

std::filesystem::path default_template_dir();

std::string render_guidance(const AgileSnapshot& snapshot);

// Last \boxed{...} group, else the last word of the last non-empty line.
std::optional<Action> parse_action_answer(GameId game, const std::string& answer);

// "Turn t: A" lines address absolute turns; otherwise the last boxed group
// (or the whole text) is read as a sequence starting at origin_turn.
std::map<int, Action> parse_plan(GameId game, const std::string& answer, int origin_turn);

// Body of the last fenced code block, else the whole answer.
std::string extract_code(const std::string& answer);

}  // namespace rtgym
