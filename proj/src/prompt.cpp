#include "rtgym/prompt.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "rtgym/error.hpp"

#ifndef RTGYM_TEMPLATE_DIR
#define RTGYM_TEMPLATE_DIR "templates"
#endif

namespace rtgym {

namespace {

std::string key_for(ReasonerRole role) { return std::string(to_string(role)); }
std::string key_for(GameId game) { return "rules_" + std::string(to_string(game)); }

const char* kBuiltinAction =
    "You are playing {{game}}. The game advances on its own; answer quickly.\n"
    "{{rules}}\n\nCurrent turn: {{turn}}\nState:\n{{observation}}\n\n{{guidance}}\n"
    "Reply with a single action inside \\boxed{}.\n";
const char* kBuiltinPlan =
    "You are playing {{game}}. The state below is frozen at turn {{turn}}; the game keeps moving\n"
    "while you think, so plan several turns ahead.\n{{rules}}\n\nState:\n{{observation}}\n\n"
    "Write one line per turn in the form `Turn <t>: <action>`.\n";
const char* kBuiltinPolicy =
    "You are writing a controller for {{game}}.\n{{rules}}\n\nExample state at turn {{turn}}:\n{{observation}}\n\n"
    "Return a Python function `next_action(state)` that returns one action letter, in a ```python block.\n";

const char* kBuiltinRules[] = {
    // freeway
    "Get the chicken from lane 0 to lane 9. Moves: U (up), D (down), S (stay). Cars in lanes 1-8 drive "
    "along a ring; if a car covers x = 0 in the lane you are standing on when a turn resolves, you are "
    "sent back to lane 0. Reward is the step limit minus the turns used to cross.",
    // snake
    "Steer the snake: U (y+1), D (y-1), L, R. Turning straight back is ignored. Eating food grows the "
    "snake by one; hitting a wall, an obstacle or your own body ends the game with a one-point penalty. "
    "Food disappears after a while.",
    // overcooked
    "Cook onion soup with a scripted partner. Moves: U, D, L, R, I (interact with the tile you face), "
    "S (idle). Three onions in a pot start it cooking; scoop the finished soup with a dish and deliver "
    "it at the serving window. Dish +3, soup +5, serve +20.",
};

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<std::string> last_boxed(const std::string& text) {
  const std::string tag = "\\boxed{";
  const auto pos = text.rfind(tag);
  if (pos == std::string::npos) return std::nullopt;
  const auto end = text.find('}', pos + tag.size());
  if (end == std::string::npos) return std::nullopt;
  return text.substr(pos + tag.size(), end - pos - tag.size());
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cur += c;
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

PromptLibrary::PromptLibrary() {
  texts_[key_for(ReasonerRole::Action)] = kBuiltinAction;
  texts_[key_for(ReasonerRole::Plan)] = kBuiltinPlan;
  texts_[key_for(ReasonerRole::Policy)] = kBuiltinPolicy;
  for (GameId g : {GameId::Freeway, GameId::Snake, GameId::Overcooked})
    texts_[key_for(g)] = kBuiltinRules[static_cast<int>(g)];
}

PromptLibrary PromptLibrary::from_directory(const std::filesystem::path& dir) {
  PromptLibrary lib;
  for (auto& [key, text] : lib.texts_) {
    const auto p = dir / (key + ".txt");
    if (std::filesystem::exists(p)) text = read_file(p);
  }
  return lib;
}

std::filesystem::path default_template_dir() { return RTGYM_TEMPLATE_DIR; }

const std::string& PromptLibrary::role_template(ReasonerRole role) const { return texts_.at(key_for(role)); }
const std::string& PromptLibrary::rules(GameId game) const { return texts_.at(key_for(game)); }

std::string render_guidance(const AgileSnapshot& snap) {
  if (snap.partial_trace.empty() && snap.finished_plan.empty()) return "";
  std::string out = "Notes from a slower planner that looked at an earlier state";
  if (snap.trace_origin_turn) out += " (turn " + std::to_string(*snap.trace_origin_turn) + ")";
  out += ". They may be out of date; check them against the current state.\n";
  if (!snap.finished_plan.empty()) out += "Latest finished plan:\n" + snap.finished_plan + "\n";
  if (!snap.partial_trace.empty()) out += "Planner thinking so far:\n" + snap.partial_trace + "\n";
  return out;
}

std::string PromptLibrary::render(const ReasonerRequest& r) const {
  std::string out = role_template(r.role);
  replace_all(out, "{{rules}}", rules(r.game));
  replace_all(out, "{{game}}", std::string(to_string(r.game)));
  replace_all(out, "{{turn}}", std::to_string(r.turn));
  replace_all(out, "{{budget}}", std::to_string(r.budget_hint));
  replace_all(out, "{{state}}", r.state.dump());
  replace_all(out, "{{observation}}", r.observation.dump());
  replace_all(out, "{{guidance}}", r.snapshot ? render_guidance(*r.snapshot) : std::string());
  return out;
}

std::optional<Action> parse_action_answer(GameId game, const std::string& answer) {
  if (auto b = last_boxed(answer)) {
    const auto w = words(*b);
    if (w.size() == 1) return parse_action(game, w.front());
    return std::nullopt;
  }
  std::istringstream lines(answer);
  std::string line, last;
  while (std::getline(lines, line))
    if (!trim(line).empty()) last = line;
  const auto w = words(last);
  if (w.empty()) return std::nullopt;
  return parse_action(game, w.back());
}

std::map<int, Action> parse_plan(GameId game, const std::string& answer, int origin_turn) {
  std::map<int, Action> plan;
  std::istringstream lines(answer);
  std::string line;
  bool absolute = false;
  while (std::getline(lines, line)) {
    const std::string t = trim(line);
    if (t.rfind("Turn ", 0) != 0) continue;
    const auto colon = t.find(':');
    if (colon == std::string::npos) continue;
    int turn = 0;
    try {
      turn = std::stoi(t.substr(5, colon - 5));
    } catch (const std::exception&) {
      continue;
    }
    const auto w = words(t.substr(colon + 1));
    if (w.empty()) continue;
    if (auto a = parse_action(game, w.front())) {
      plan[turn] = *a;
      absolute = true;
    }
  }
  if (absolute) return plan;

  const std::string body = last_boxed(answer).value_or(answer);
  int turn = origin_turn;
  for (const auto& w : words(body)) {
    const auto a = parse_action(game, w);
    if (!a) return {};
    plan[turn++] = *a;
  }
  return plan;
}

std::string extract_code(const std::string& answer) {
  const auto close = answer.rfind("```");
  if (close == std::string::npos || close == 0) return answer;
  const auto open = answer.rfind("```", close - 1);
  if (open == std::string::npos) return answer;
  const auto body_start = answer.find('\n', open);
  if (body_start == std::string::npos || body_start > close) return answer;
  return answer.substr(body_start + 1, close - body_start - 1);
}

}  // namespace rtgym
