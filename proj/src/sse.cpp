#include "rtgym/sse.hpp"

#include <nlohmann/json.hpp>

namespace rtgym {

std::vector<SseEvent> SseParser::feed(std::string_view bytes) {
  std::vector<SseEvent> out;
  for (char c : bytes) {
    if (c == '\n' && last_was_cr_) {  // second half of CRLF
      last_was_cr_ = false;
      continue;
    }
    last_was_cr_ = c == '\r';
    if (c == '\r' || c == '\n') {
      line(pending_, out);
      pending_.clear();
    } else {
      pending_ += c;
    }
  }
  return out;
}

std::vector<SseEvent> SseParser::finish() {
  std::vector<SseEvent> out;
  if (!pending_.empty()) {
    line(pending_, out);
    pending_.clear();
  }
  dispatch(out);
  return out;
}

void SseParser::line(std::string_view text, std::vector<SseEvent>& out) {
  if (text.empty()) {
    dispatch(out);
    return;
  }
  if (text.front() == ':') return;  // comment / keep-alive
  const auto colon = text.find(':');
  std::string_view field = text.substr(0, colon);
  std::string_view value;
  if (colon != std::string_view::npos) {
    value = text.substr(colon + 1);
    if (!value.empty() && value.front() == ' ') value.remove_prefix(1);
  }
  if (field == "data") {
    if (has_data_) data_ += '\n';
    data_ += value;
    has_data_ = true;
  } else if (field == "event") {
    event_ = value;
  }
  // id and retry are irrelevant for a single request.
}

void SseParser::dispatch(std::vector<SseEvent>& out) {
  if (has_data_) out.push_back({event_, data_});
  event_.clear();
  data_.clear();
  has_data_ = false;
}

ChatChunk parse_chat_chunk(std::string_view data) {
  ChatChunk chunk;
  if (data == "[DONE]") {
    chunk.done = true;
    return chunk;
  }
  const auto j = nlohmann::json::parse(data, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    chunk.error = "malformed stream payload";
    return chunk;
  }
  if (j.contains("error")) {
    const auto& e = j.at("error");
    chunk.error = e.is_object() ? e.value("message", e.dump()) : e.dump();
    return chunk;
  }
  if (j.contains("system_fingerprint") && j.at("system_fingerprint").is_string())
    chunk.fingerprint = j.at("system_fingerprint").get<std::string>();
  if (!j.contains("choices") || !j.at("choices").is_array()) return chunk;
  for (const auto& choice : j.at("choices")) {
    if (!choice.contains("delta")) continue;
    const auto& d = choice.at("delta");
    for (const char* key : {"reasoning_content", "reasoning"}) {
      if (d.contains(key) && d.at(key).is_string() && !d.at(key).get_ref<const std::string&>().empty()) {
        chunk.deltas.push_back({d.at(key).get<std::string>(), TokenKind::Thinking});
        break;
      }
    }
    if (d.contains("content") && d.at("content").is_string() && !d.at("content").get_ref<const std::string&>().empty())
      chunk.deltas.push_back({d.at("content").get<std::string>(), TokenKind::Answer});
  }
  return chunk;
}

}  // namespace rtgym
