#pragma once

#include <cstdint>
#include <random>

namespace mmw {

// Purpose tags for derived random streams. Values are part of the
// reproducibility contract: changing one changes every seeded result.
enum class StreamTag : std::uint32_t {
  placement = 1,
  mobility = 2,
  los = 3,
  shadowing = 4,
  small_scale = 5,
};

// Derives independent, order-free random streams from a campaign seed.
// A stream is a pure function of (seed, tag, a, b, c), so links and users
// can be evaluated in any order, or in parallel, with identical results.
class StreamFactory {
public:
  explicit StreamFactory(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::mt19937_64 stream(StreamTag tag, std::uint64_t a = 0, std::uint64_t b = 0,
                         std::uint64_t c = 0) const {
    std::seed_seq seq{lo(seed_), hi(seed_), static_cast<std::uint32_t>(tag),
                      lo(a),     hi(a),     lo(b),
                      hi(b),     lo(c),     hi(c)};
    return std::mt19937_64(seq);
  }

private:
  static std::uint32_t lo(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
  static std::uint32_t hi(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

  std::uint64_t seed_;
};

}  // namespace mmw
