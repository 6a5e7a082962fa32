#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

namespace sscmi {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based, splittable generator.
///
/// Draw k of a stream is a pure function of (key, k), where the key is
/// derived from the seed and a path of stream identifiers. Streams for
/// (seed, replica, round, purpose) never share state, so replicas can be
/// evaluated in any order or in parallel and still reproduce bit for bit.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t seed) noexcept : key_(mix64(seed ^ 0x5353434d49ULL)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept { return mix64(key_ + 0xd1b54a32d192ed03ULL * ++counter_); }

  /// Child stream; independent of how many draws the parent has made.
  [[nodiscard]] constexpr CounterRng split(std::uint64_t id) const noexcept {
    CounterRng child{0};
    child.key_ = mix64(key_ ^ mix64(id + 0x632be59bd9b4e019ULL));
    return child;
  }

  [[nodiscard]] constexpr CounterRng split(std::uint64_t a, std::uint64_t b) const noexcept {
    return split(a).split(b);
  }

  [[nodiscard]] constexpr CounterRng split(std::uint64_t a, std::uint64_t b, std::uint64_t c) const noexcept {
    return split(a).split(b).split(c);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Index drawn from an (approximately) normalized probability vector.
  /// Mass lost to rounding falls on the last positive entry.
  std::size_t categorical(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("categorical: empty distribution");
    const double x = uniform();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      last_positive = i;
      acc += probs[i];
      if (x < acc) return i;
    }
    return last_positive;
  }

  [[nodiscard]] constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Named purposes for per-round streams.
enum class Stream : std::uint64_t { row = 1, selector = 2, learner = 3, coin = 4, feedback = 5, virtual_arm = 6, world = 7 };

/// Stream for one (replica, round, purpose) triple under a global seed.
inline CounterRng stream_for(std::uint64_t seed, std::uint64_t replica, std::uint64_t round, Stream purpose) noexcept {
  return CounterRng{seed}.split(replica, round, static_cast<std::uint64_t>(purpose));
}

}  // namespace sscmi
