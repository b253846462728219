#include "rtgym/llm.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <mutex>
#include <thread>

#include <curl/curl.h>

#include "rtgym/error.hpp"
#include "rtgym/sse.hpp"

namespace rtgym {

void LlmEndpoint::validate() const {
  if (url.empty()) throw Error(ErrorCode::Config, "llm endpoint url is empty");
  if (model.empty()) throw Error(ErrorCode::Config, "llm model name is empty");
  if (api_key_env.empty()) throw Error(ErrorCode::Config, "llm api_key_env is empty");
  const char* key = std::getenv(api_key_env.c_str());
  if (!key || !*key) throw Error(ErrorCode::Config, "environment variable " + api_key_env + " is not set");
}

std::string LlmEndpoint::api_key() const {
  const char* key = std::getenv(api_key_env.c_str());
  return key ? key : "";
}

void from_json(const nlohmann::json& j, LlmEndpoint& e) {
  e.url = j.value("url", std::string());
  e.model = j.value("model", std::string());
  e.api_key_env = j.value("api_key_env", std::string("OPENAI_API_KEY"));
  e.sampling = j.value("sampling", nlohmann::json::object());
  e.connect_timeout_ms = j.value("connect_timeout_ms", 10000);
  e.idle_timeout_ms = j.value("idle_timeout_ms", 120000);
}

void to_json(nlohmann::json& j, const LlmEndpoint& e) {
  j = {{"url", e.url},
       {"model", e.model},
       {"api_key_env", e.api_key_env},
       {"sampling", e.sampling},
       {"connect_timeout_ms", e.connect_timeout_ms},
       {"idle_timeout_ms", e.idle_timeout_ms}};
}

nlohmann::json chat_request_body(const LlmEndpoint& endpoint, const ReasonerRequest& request) {
  nlohmann::json body = endpoint.sampling.is_object() ? endpoint.sampling : nlohmann::json::object();
  body["model"] = endpoint.model;
  body["stream"] = true;
  body["seed"] = request.sampling_seed;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}});
  return body;
}

namespace {

void curl_init_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
}

// Producer side runs on its own thread; the consumer blocks in produce().
class LlmStream final : public TokenStream {
 public:
  LlmStream(const LlmEndpoint& endpoint, const ReasonerRequest& request)
      : url_(endpoint.url),
        auth_("Authorization: Bearer " + endpoint.api_key()),
        body_(chat_request_body(endpoint, request).dump()),
        connect_timeout_ms_(endpoint.connect_timeout_ms),
        idle_timeout_ms_(endpoint.idle_timeout_ms) {
    curl_init_once();
    worker_ = std::thread([this] { run(); });
  }

  ~LlmStream() override {
    cancel_ = true;
    if (worker_.joinable()) worker_.join();
  }

 protected:
  std::optional<Produced> produce() override {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !queue_.empty() || finished_; });
    if (!queue_.empty()) {
      Produced p = std::move(queue_.front());
      queue_.pop_front();
      return p;
    }
    if (failure_)
      fail(*failure_);
    else
      complete();
    return std::nullopt;
  }

 private:
  static std::size_t on_bytes(char* ptr, std::size_t size, std::size_t n, void* self) {
    auto* s = static_cast<LlmStream*>(self);
    const std::size_t len = size * n;
    long status = 0;
    curl_easy_getinfo(s->curl_, CURLINFO_RESPONSE_CODE, &status);
    if (status >= 400) {
      s->error_body_.append(ptr, len);
      return len;
    }
    for (const auto& ev : s->parser_.feed({ptr, len})) s->handle(ev);
    return s->cancel_ ? 0 : len;
  }

  static int on_progress(void* self, curl_off_t, curl_off_t, curl_off_t, curl_off_t) {
    return static_cast<LlmStream*>(self)->cancel_ ? 1 : 0;
  }

  void handle(const SseEvent& ev) {
    const ChatChunk chunk = parse_chat_chunk(ev.data);
    std::lock_guard lock(mu_);
    if (chunk.error) {
      if (!failure_) failure_ = "TransportError: " + *chunk.error;
      return;
    }
    if (chunk.done) saw_done_ = true;
    for (const auto& d : chunk.deltas) queue_.push_back({d.text, d.kind});
    if (!chunk.deltas.empty()) cv_.notify_one();
  }

  void run() {
    curl_ = curl_easy_init();
    curl_slist* headers = nullptr;
    headers = curl_slist_append(headers, "Content-Type: application/json");
    headers = curl_slist_append(headers, "Accept: text/event-stream");
    headers = curl_slist_append(headers, auth_.c_str());
    curl_easy_setopt(curl_, CURLOPT_URL, url_.c_str());
    curl_easy_setopt(curl_, CURLOPT_HTTPHEADER, headers);
    curl_easy_setopt(curl_, CURLOPT_POSTFIELDS, body_.c_str());
    curl_easy_setopt(curl_, CURLOPT_WRITEFUNCTION, &LlmStream::on_bytes);
    curl_easy_setopt(curl_, CURLOPT_WRITEDATA, this);
    curl_easy_setopt(curl_, CURLOPT_XFERINFOFUNCTION, &LlmStream::on_progress);
    curl_easy_setopt(curl_, CURLOPT_XFERINFODATA, this);
    curl_easy_setopt(curl_, CURLOPT_NOPROGRESS, 0L);
    curl_easy_setopt(curl_, CURLOPT_NOSIGNAL, 1L);
    curl_easy_setopt(curl_, CURLOPT_CONNECTTIMEOUT_MS, static_cast<long>(connect_timeout_ms_));
    // Stall detection: fewer than 1 byte/s over the idle window aborts.
    curl_easy_setopt(curl_, CURLOPT_LOW_SPEED_LIMIT, 1L);
    curl_easy_setopt(curl_, CURLOPT_LOW_SPEED_TIME, std::max(1L, static_cast<long>(idle_timeout_ms_ / 1000)));

    const CURLcode rc = curl_easy_perform(curl_);
    long status = 0;
    curl_easy_getinfo(curl_, CURLINFO_RESPONSE_CODE, &status);
    for (const auto& ev : parser_.finish()) handle(ev);

    {
      std::lock_guard lock(mu_);
      if (!failure_) {
        if (status == 429) {
          failure_ = "RateLimited: " + error_body_;
        } else if (status >= 400) {
          failure_ = "TransportError: HTTP " + std::to_string(status) + ": " + error_body_;
        } else if (rc == CURLE_OPERATION_TIMEDOUT) {
          failure_ = std::string("Timeout: ") + curl_easy_strerror(rc);
        } else if (rc != CURLE_OK && !cancel_) {
          failure_ = std::string("TransportError: ") + curl_easy_strerror(rc);
        }
      }
      finished_ = true;
    }
    cv_.notify_all();
    curl_slist_free_all(headers);
    curl_easy_cleanup(curl_);
    curl_ = nullptr;
  }

  std::string url_, auth_, body_;
  int connect_timeout_ms_, idle_timeout_ms_;
  CURL* curl_ = nullptr;
  SseParser parser_;
  std::string error_body_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Produced> queue_;
  bool finished_ = false;
  bool saw_done_ = false;
  std::optional<std::string> failure_;
  std::atomic<bool> cancel_{false};
  std::thread worker_;
};

class ReplayStream final : public TokenStream {
 public:
  explicit ReplayStream(Fixture f) : fixture_(std::move(f)) {}

 protected:
  std::optional<Produced> produce() override {
    if (index_ < fixture_.events.size()) {
      const auto& e = fixture_.events[index_++];
      return Produced{e.text, e.kind};
    }
    if (fixture_.failure)
      fail(*fixture_.failure);
    else
      complete();
    return std::nullopt;
  }

 private:
  Fixture fixture_;
  std::size_t index_ = 0;
};

class RecordingStream final : public TokenStream {
 public:
  RecordingStream(std::unique_ptr<TokenStream> inner, std::filesystem::path path)
      : inner_(std::move(inner)), path_(std::move(path)) {}
  ~RecordingStream() override {
    try {
      save_fixture(path_, record_);
    } catch (...) {
      // a lost fixture must not take the episode down
    }
  }

 protected:
  std::optional<Produced> produce() override {
    auto ev = inner_->next();
    if (ev) {
      record_.events.push_back(*ev);
      return Produced{ev->text, ev->kind};
    }
    if (inner_->status() == StreamStatus::Failed) {
      record_.failure = inner_->failure();
      fail(inner_->failure());
    } else {
      complete();
    }
    return std::nullopt;
  }

 private:
  std::unique_ptr<TokenStream> inner_;
  std::filesystem::path path_;
  Fixture record_;
};

}  // namespace

LlmReasoner::LlmReasoner(LlmEndpoint endpoint) : endpoint_(std::move(endpoint)) { endpoint_.validate(); }

std::unique_ptr<TokenStream> LlmReasoner::start(const ReasonerRequest& request) {
  return std::make_unique<LlmStream>(endpoint_, request);
}

nlohmann::json LlmReasoner::describe() const {
  return {{"kind", "llm"}, {"url", endpoint_.url}, {"model", endpoint_.model}, {"sampling", endpoint_.sampling}};
}

Fixture load_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open fixture " + path.string());
  Fixture f;
  std::string line;
  std::uint64_t count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw Error(ErrorCode::SchemaMismatch, "bad fixture line in " + path.string());
    if (j.contains("failed")) {
      f.failure = j.at("failed").get<std::string>();
      break;
    }
    TokenEvent e;
    e.text = j.at("text").get<std::string>();
    e.kind = j.value("kind", "thinking") == "answer" ? TokenKind::Answer : TokenKind::Thinking;
    e.cumulative = ++count;
    f.events.push_back(std::move(e));
  }
  return f;
}

void save_fixture(const std::filesystem::path& path, const Fixture& fixture) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write fixture " + path.string());
  for (const auto& e : fixture.events)
    out << nlohmann::json{{"text", e.text}, {"kind", e.kind == TokenKind::Answer ? "answer" : "thinking"}}.dump()
        << '\n';
  if (fixture.failure) out << nlohmann::json{{"failed", *fixture.failure}}.dump() << '\n';
}

std::unique_ptr<TokenStream> fixture_stream(Fixture fixture) {
  return std::make_unique<ReplayStream>(std::move(fixture));
}

FixtureReasoner::FixtureReasoner(std::vector<std::filesystem::path> files) : files_(std::move(files)) {
  if (files_.empty()) throw Error(ErrorCode::Config, "fixture reasoner needs at least one file");
  for (const auto& p : files_) fixtures_.push_back(load_fixture(p));
}

std::unique_ptr<TokenStream> FixtureReasoner::start(const ReasonerRequest& request) {
  return fixture_stream(fixtures_[request.call_index % fixtures_.size()]);
}

nlohmann::json FixtureReasoner::describe() const {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& p : files_) files.push_back(p.filename().string());
  return {{"kind", "fixture"}, {"files", files}};
}

RecordingReasoner::RecordingReasoner(Reasoner& inner, std::filesystem::path dir)
    : inner_(inner), dir_(std::move(dir)) {}

std::unique_ptr<TokenStream> RecordingReasoner::start(const ReasonerRequest& request) {
  auto path = dir_ / (std::string(to_string(request.role)) + "-" + std::to_string(request.call_index) + ".jsonl");
  return std::make_unique<RecordingStream>(inner_.start(request), std::move(path));
}

nlohmann::json RecordingReasoner::describe() const {
  auto j = inner_.describe();
  j["recorded_to"] = dir_.string();
  return j;
}

}  // namespace rtgym
