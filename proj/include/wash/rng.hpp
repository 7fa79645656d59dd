#pragma once

// Philox4x32-10 counter-based generator and a seekable standard-normal stream.

#include <array>
#include <cmath>
#include <cstdint>

namespace wash {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

inline Philox4x32Counter philox4x32_10(Philox4x32Counter c, Philox4x32Key k) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{M0} * c[0];
    const std::uint64_t p1 = std::uint64_t{M1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += W0;
    k[1] += W1;
  }
  return c;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed of trial `index` within a batch driven by `master_seed`.
inline std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

/// Standard normals from Philox blocks via Box-Muller. Draw i is a pure
/// function of (seed, i); cursor() is the index of the next draw.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed, std::uint64_t cursor = 0)
      : seed_(seed), key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {
    seek(cursor);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t cursor() const { return cursor_; }

  void seek(std::uint64_t cursor) {
    cursor_ = cursor;
    block_ = ~std::uint64_t{0};
  }

  double operator()() {
    const std::uint64_t b = cursor_ >> 1;
    if (b != block_) fill(b);
    return pair_[cursor_++ & 1];
  }

 private:
  void fill(std::uint64_t b) {
    const Philox4x32Counter r =
        philox4x32_10({static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32), 0u, 0u}, key_);
    const std::uint64_t a = (std::uint64_t{r[0]} << 32 | r[1]) >> 11;
    const std::uint64_t c = (std::uint64_t{r[2]} << 32 | r[3]) >> 11;
    constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
    const double u1 = (static_cast<double>(a) + 1.0) * scale;  // (0, 1]
    const double u2 = static_cast<double>(c) * scale;          // [0, 1)
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586 * u2;
    pair_[0] = rad * std::cos(ang);
    pair_[1] = rad * std::sin(ang);
    block_ = b;
  }

  std::uint64_t seed_;
  Philox4x32Key key_;
  std::uint64_t cursor_ = 0;
  std::uint64_t block_ = ~std::uint64_t{0};
  double pair_[2] = {0.0, 0.0};
};

}  // namespace wash
