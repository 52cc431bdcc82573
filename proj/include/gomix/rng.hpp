#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace gomix {

// splitmix64 finalizer; decorrelates seeds derived from counters or parent streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic random stream. All draws are built on the raw mt19937_64
// output (which the standard pins down bit-for-bit) rather than on the
// std distributions, whose results vary between standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(mix64(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Unbiased draw in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t threshold = (0 - un) % un;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = gen_();
      if (r >= threshold) return static_cast<std::size_t>(r % un);
    }
  }

  // Inclusive range draw.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    uniform_index(static_cast<std::size_t>(hi - lo) + 1));
  }

  double uniform_real() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Independent child stream; the parent advances by one draw.
  RngStream fork() { return RngStream(gen_()); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

  void permutation(std::vector<std::size_t>& out, std::size_t n) {
    out.resize(n);
    std::iota(out.begin(), out.end(), std::size_t{0});
    shuffle(out);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace gomix
