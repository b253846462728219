#include "rtgym/reasoner.hpp"

namespace rtgym {

std::optional<TokenEvent> TokenStream::next() {
  if (status_ != StreamStatus::InFlight) return std::nullopt;
  std::optional<Produced> p;
  if (lookahead_) {
    p = std::move(lookahead_);
    lookahead_.reset();
  } else {
    p = produce();
  }
  if (!p) {
    if (status_ == StreamStatus::InFlight) complete();
    return std::nullopt;
  }
  ++produced_;
  if (p->kind == TokenKind::Thinking) {
    ++thinking_tokens_;
    thinking_ += p->text;
  } else {
    answer_ += p->text;
  }
  return TokenEvent{std::move(p->text), p->kind, produced_};
}

TokenCount TokenStream::pull(TokenCount max_tokens) {
  TokenCount n = 0;
  while (n < max_tokens && next()) ++n;
  // A stream whose last token lands exactly on the budget is finished too;
  // peek so the caller sees Completed rather than InFlight.
  if (n == max_tokens && status_ == StreamStatus::InFlight && !lookahead_) {
    lookahead_ = produce();
    if (!lookahead_ && status_ == StreamStatus::InFlight) complete();
  }
  return n;
}

std::string_view to_string(ReasonerRole role) {
  switch (role) {
    case ReasonerRole::Action: return "action";
    case ReasonerRole::Plan: return "plan";
    case ReasonerRole::Policy: return "policy";
  }
  return "?";
}

}  // namespace rtgym
