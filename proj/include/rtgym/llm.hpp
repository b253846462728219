#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rtgym/reasoner.hpp"

namespace rtgym {

// An OpenAI-compatible chat-completions endpoint. The key itself never
// lives in config files: only the name of the variable that holds it.
struct LlmEndpoint {
  std::string url;  // full .../chat/completions URL
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  nlohmann::json sampling = nlohmann::json::object();  // temperature, top_p, max_tokens, ...
  int connect_timeout_ms = 10000;
  int idle_timeout_ms = 120000;  // no bytes for this long fails the stream

  // Throws Config when url/model are empty or the key variable is unset.
  void validate() const;
  std::string api_key() const;
};

void from_json(const nlohmann::json& j, LlmEndpoint& e);
void to_json(nlohmann::json& j, const LlmEndpoint& e);

// Body of one streaming request.
nlohmann::json chat_request_body(const LlmEndpoint& endpoint, const ReasonerRequest& request);

// Streams one completion per call. Each delta chunk counts as one token.
// Transport errors, timeouts and HTTP 429 end the stream as Failed with a
// "TransportError:", "Timeout:" or "RateLimited:" prefix.
class LlmReasoner final : public Reasoner {
 public:
  explicit LlmReasoner(LlmEndpoint endpoint);
  std::unique_ptr<TokenStream> start(const ReasonerRequest& request) override;
  nlohmann::json describe() const override;
  bool is_live() const override { return true; }

 private:
  LlmEndpoint endpoint_;
};

// Fixture format: one JSON object per line, either a token
//   {"text": "...", "kind": "thinking"|"answer"}
// or a terminal {"failed": "reason"}. A file without a terminal line
// completes normally.
struct Fixture {
  std::vector<TokenEvent> events;
  std::optional<std::string> failure;
};

Fixture load_fixture(const std::filesystem::path& path);
void save_fixture(const std::filesystem::path& path, const Fixture& fixture);
std::unique_ptr<TokenStream> fixture_stream(Fixture fixture);

// Replays recorded streams; call i plays fixture i modulo the count.
class FixtureReasoner final : public Reasoner {
 public:
  explicit FixtureReasoner(std::vector<std::filesystem::path> files);
  std::unique_ptr<TokenStream> start(const ReasonerRequest& request) override;
  nlohmann::json describe() const override;

 private:
  std::vector<std::filesystem::path> files_;
  std::vector<Fixture> fixtures_;
};

// Wraps another reasoner and writes every stream it produces to
// <dir>/<role>-<call index>.jsonl once the stream ends or is dropped.
class RecordingReasoner final : public Reasoner {
 public:
  RecordingReasoner(Reasoner& inner, std::filesystem::path dir);
  std::unique_ptr<TokenStream> start(const ReasonerRequest& request) override;
  nlohmann::json describe() const override;
  bool is_live() const override { return inner_.is_live(); }

 private:
  Reasoner& inner_;
  std::filesystem::path dir_;
};

}  // namespace rtgym
