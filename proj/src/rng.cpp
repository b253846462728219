#include "rtgym/rng.hpp"

#include <nlohmann/json.hpp>

namespace rtgym {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

CounterRng::CounterRng(std::uint64_t seed, std::string_view stream, std::uint64_t substream)
    : key_(splitmix64(splitmix64(seed) ^ splitmix64(fnv1a64(stream) + substream))) {}

std::uint64_t CounterRng::next_u64() noexcept {
  const std::uint64_t out = splitmix64(key_ + counter_ * 0xD1B54A32D192ED03ULL);
  ++counter_;
  return out;
}

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
  // Rejection on the top of the range keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % bound;
}

std::int64_t CounterRng::between(std::int64_t lo, std::int64_t hi) noexcept {
  return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

void to_json(nlohmann::json& j, const CounterRng& rng) {
  j = nlohmann::json{{"key", rng.key_}, {"counter", rng.counter_}};
}

void from_json(const nlohmann::json& j, CounterRng& rng) {
  rng.key_ = j.at("key").get<std::uint64_t>();
  rng.counter_ = j.at("counter").get<std::uint64_t>();
}

}  // namespace rtgym
