#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gen.hpp"
#include "rtgym/error.hpp"
#include "rtgym/llm.hpp"
#include "rtgym/sse.hpp"

using namespace rtgym;
using rtgym::testing::Gen;

namespace {

std::vector<SseEvent> drain_parser(SseParser& p, const std::vector<std::string>& pieces) {
  std::vector<SseEvent> out;
  for (const auto& piece : pieces) {
    auto ev = p.feed(piece);
    out.insert(out.end(), ev.begin(), ev.end());
  }
  auto tail = p.finish();
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

std::string random_text(Gen& gen) {
  static const std::string alphabet = "abcxyz {}\":,[]0129 ";
  std::string s;
  const int n = gen.range(0, 12);
  for (int i = 0; i < n; ++i) s += alphabet[static_cast<std::size_t>(gen.range(0, static_cast<int>(alphabet.size()) - 1))];
  return s;
}

// Serializes events with comments and multi-line data fields. One line
// ending per stream: a bare CR followed by a blank LF line would read as CRLF.
std::string encode(Gen& gen, const std::vector<SseEvent>& events) {
  const char* endings[] = {"\n", "\r\n", "\r"};
  const std::string ending = endings[gen.range(0, 2)];
  auto eol = [&] { return ending; };
  std::string out;
  for (const auto& e : events) {
    if (gen.range(0, 3) == 0) out += ": keep-alive" + eol();
    if (!e.event.empty()) out += "event: " + e.event + eol();
    std::size_t start = 0;
    while (true) {
      const auto nl = e.data.find('\n', start);
      const std::string part = e.data.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
      // Without the optional space a leading space in the value would be eaten.
      const bool spaced = gen.coin() || (!part.empty() && part.front() == ' ');
      out += (spaced ? "data: " : "data:") + part + eol();
      if (nl == std::string::npos) break;
      start = nl + 1;
    }
    out += eol();
  }
  return out;
}

std::string chunk(const char* field, const std::string& text) {
  return "data: " + nlohmann::json{{"choices", {{{"delta", {{field, text}}}}}}}.dump() + "\n\n";
}

// Local stand-in for a chat-completions server.
class MockServer {
 public:
  MockServer() {
    server_.Post("/ok/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      std::string body = ": warming up\n\n";
      for (int i = 0; i < 100; ++i) body += chunk("reasoning_content", "r" + std::to_string(i) + " ");
      for (int i = 0; i < 20; ++i) body += chunk("content", i == 19 ? "\\boxed{U}" : "a ");
      body += "data: [DONE]\n\n";
      res.set_content(body, "text/event-stream");
    });
    server_.Post("/busy/chat/completions", [](const httplib::Request&, httplib::Response& res) {
      res.status = 429;
      res.set_content(R"({"error":{"message":"slow down"}})", "application/json");
    });
    server_.Post("/broken/chat/completions", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(chunk("content", "x") + "data: {\"error\":{\"message\":\"overloaded\"}}\n\n",
                      "text/event-stream");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/" + path + "/chat/completions";
  }

  std::string last_auth_;
  std::string last_body_;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

LlmEndpoint endpoint(const std::string& url) {
  setenv("RTGYM_TEST_KEY", "sk-test", 1);
  LlmEndpoint e;
  e.url = url;
  e.model = "mock-model";
  e.api_key_env = "RTGYM_TEST_KEY";
  e.connect_timeout_ms = 2000;
  e.idle_timeout_ms = 5000;
  return e;
}

std::unique_ptr<TokenStream> run(LlmReasoner& r) {
  ReasonerRequest req;
  req.prompt = "cross the road";
  req.sampling_seed = 7;
  auto s = r.start(req);
  while (s->next()) {
  }
  return s;
}

}  // namespace

TEST(Sse, FragmentationDoesNotChangeEvents) {
  Gen gen(2024);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<SseEvent> events(static_cast<std::size_t>(gen.range(1, 8)));
    for (auto& e : events) {
      e.event = gen.range(0, 4) == 0 ? "delta" : "";
      e.data = random_text(gen);
      if (gen.coin()) e.data += "\n" + random_text(gen);
    }
    const std::string wire = encode(gen, events);

    SseParser whole;
    EXPECT_EQ(drain_parser(whole, {wire}), events) << "trial " << trial;

    std::vector<std::string> pieces;
    for (std::size_t at = 0; at < wire.size();) {
      const std::size_t n = static_cast<std::size_t>(gen.range(1, 7));
      pieces.push_back(wire.substr(at, n));
      at += n;
    }
    SseParser split;
    ASSERT_EQ(drain_parser(split, pieces), events) << "trial " << trial;

    std::vector<std::string> bytes;
    for (char c : wire) bytes.emplace_back(1, c);
    SseParser one_by_one;
    ASSERT_EQ(drain_parser(one_by_one, bytes), events);
  }
}

TEST(Sse, TrailingEventWithoutBlankLine) {
  SseParser p;
  EXPECT_TRUE(p.feed("data: tail").empty());
  EXPECT_EQ(p.finish(), (std::vector<SseEvent>{{"", "tail"}}));
}

TEST(ChatChunk, Decoding) {
  EXPECT_TRUE(parse_chat_chunk("[DONE]").done);
  const auto c = parse_chat_chunk(
      R"({"system_fingerprint":"fp1","choices":[{"delta":{"reasoning_content":"hm","content":"U"}}]})");
  EXPECT_EQ(c.deltas, (std::vector<ChatDelta>{{"hm", TokenKind::Thinking}, {"U", TokenKind::Answer}}));
  EXPECT_EQ(c.fingerprint, "fp1");
  EXPECT_EQ(parse_chat_chunk(R"({"choices":[{"delta":{"reasoning":"x"}}]})").deltas.front().kind,
            TokenKind::Thinking);
  EXPECT_TRUE(parse_chat_chunk(R"({"choices":[{"delta":{"content":""}}]})").deltas.empty());
  EXPECT_TRUE(parse_chat_chunk("{not json").error);
  EXPECT_EQ(parse_chat_chunk(R"({"error":{"message":"bad"}})").error, "bad");
}

TEST(LlmClient, CountsEveryDeltaAsAToken) {
  MockServer server;
  LlmReasoner r(endpoint(server.url("ok")));
  const auto s = run(r);
  EXPECT_EQ(s->status(), StreamStatus::Completed) << s->failure();
  EXPECT_EQ(s->produced(), 120u);
  EXPECT_EQ(s->thinking_tokens(), 100u);
  EXPECT_EQ(s->answer().substr(s->answer().size() - 9), "\\boxed{U}");
  EXPECT_EQ(server.last_auth_, "Bearer sk-test");
  const auto body = nlohmann::json::parse(server.last_body_);
  EXPECT_EQ(body.at("stream"), true);
  EXPECT_EQ(body.at("model"), "mock-model");
  EXPECT_EQ(body.at("seed"), 7);
}

TEST(LlmClient, BudgetCutsTheStream) {
  MockServer server;
  LlmReasoner r(endpoint(server.url("ok")));
  ReasonerRequest req;
  auto s = r.start(req);
  EXPECT_EQ(s->pull(50), 50u);
  EXPECT_EQ(s->status(), StreamStatus::InFlight);
  EXPECT_TRUE(s->answer().empty());
}

TEST(LlmClient, RateLimitFailsTheStream) {
  MockServer server;
  LlmReasoner r(endpoint(server.url("busy")));
  const auto s = run(r);
  EXPECT_EQ(s->status(), StreamStatus::Failed);
  EXPECT_EQ(s->failure().rfind("RateLimited:", 0), 0u) << s->failure();
}

TEST(LlmClient, ErrorPayloadFailsTheStream) {
  MockServer server;
  LlmReasoner r(endpoint(server.url("broken")));
  const auto s = run(r);
  EXPECT_EQ(s->status(), StreamStatus::Failed);
  EXPECT_EQ(s->produced(), 1u);
  EXPECT_NE(s->failure().find("overloaded"), std::string::npos);
}

TEST(LlmClient, EndpointDownIsTransportError) {
  // Bind an ephemeral port and close it again: nothing listens there.
  int port = 0;
  {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    port = ntohs(addr.sin_port);
    ::close(fd);
  }
  LlmReasoner r(endpoint("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"));
  const auto s = run(r);
  EXPECT_EQ(s->status(), StreamStatus::Failed);
  EXPECT_EQ(s->failure().rfind("TransportError:", 0), 0u) << s->failure();
}

TEST(LlmEndpoint, MissingKeyIsConfigError) {
  LlmEndpoint e = endpoint("http://127.0.0.1:9/x");
  e.api_key_env = "RTGYM_SURELY_UNSET_KEY";
  unsetenv("RTGYM_SURELY_UNSET_KEY");
  try {
    e.validate();
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::Config);
  }
  const nlohmann::json j = endpoint("http://h/v1/chat/completions");
  EXPECT_EQ(j.get<LlmEndpoint>().url, "http://h/v1/chat/completions");
  EXPECT_FALSE(j.dump().find("sk-test") != std::string::npos);
}

TEST(Fixtures, RecordAndReplay) {
  const auto dir = std::filesystem::temp_directory_path() / "rtgym_fixture_test";
  std::filesystem::remove_all(dir);
  MockServer server;
  LlmReasoner live(endpoint(server.url("ok")));
  RecordingReasoner rec(live, dir);
  ReasonerRequest req;
  req.role = ReasonerRole::Plan;
  auto s = rec.start(req);
  while (s->next()) {
  }
  const std::string answer = s->answer();
  s.reset();
  const auto file = dir / "plan-0.jsonl";
  ASSERT_TRUE(std::filesystem::exists(file));
  FixtureReasoner replay({file});
  auto r = replay.start(req);
  EXPECT_EQ(r->pull(1000), 120u);
  EXPECT_EQ(r->answer(), answer);
  EXPECT_EQ(r->thinking_tokens(), 100u);
  std::filesystem::remove_all(dir);
}
