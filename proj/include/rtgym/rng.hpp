#pragma once

#include <cstdint>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

namespace rtgym {

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Counter-based generator keyed by (seed, stream name, substream). The whole
// generator state is two integers, so it lives inside environment states and
// round-trips through serialization. Distinct stream names never share
// output, which lets new consumers be added without perturbing old ones.
class CounterRng {
 public:
  CounterRng() = default;
  CounterRng(std::uint64_t seed, std::string_view stream, std::uint64_t substream = 0);

  std::uint64_t next_u64() noexcept;

  // Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

  // Unbiased integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  friend bool operator==(const CounterRng&, const CounterRng&) = default;

  friend void to_json(nlohmann::json& j, const CounterRng& rng);
  friend void from_json(const nlohmann::json& j, CounterRng& rng);

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace rtgym
