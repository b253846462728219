#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace rtgym::testing {

// Small wrapper so generators read as gen.range(lo, hi).
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  bool coin() { return range(0, 1) == 1; }
  std::uint64_t u64() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(range(0, static_cast<int>(v.size()) - 1))];
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rtgym::testing
