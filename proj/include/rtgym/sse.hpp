#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rtgym/reasoner.hpp"

namespace rtgym {

struct SseEvent {
  std::string event;  // empty means the default "message" type
  std::string data;
  friend bool operator==(const SseEvent&, const SseEvent&) = default;
};

// Incremental server-sent-events decoder. Bytes may arrive split anywhere,
// including inside a CRLF pair; the emitted events do not depend on how.
class SseParser {
 public:
  std::vector<SseEvent> feed(std::string_view bytes);
  // Dispatches a trailing event that was not followed by a blank line.
  std::vector<SseEvent> finish();

 private:
  void line(std::string_view text, std::vector<SseEvent>& out);
  void dispatch(std::vector<SseEvent>& out);

  std::string pending_;
  bool last_was_cr_ = false;
  std::string event_;
  std::string data_;
  bool has_data_ = false;
};

struct ChatDelta {
  std::string text;
  TokenKind kind = TokenKind::Thinking;
  friend bool operator==(const ChatDelta&, const ChatDelta&) = default;
};

struct ChatChunk {
  bool done = false;             // the "[DONE]" sentinel
  std::vector<ChatDelta> deltas;  // reasoning first, then content
  std::optional<std::string> error;
  std::optional<std::string> fingerprint;
};

// Decodes one chat-completions stream payload. Reasoning fields
// (reasoning_content or reasoning) map to Thinking, content to Answer.
ChatChunk parse_chat_chunk(std::string_view data);

}  // namespace rtgym
