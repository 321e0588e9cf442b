#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sonarcount {

namespace detail {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based random stream keyed by a hash of (root seed, label path).
///
/// Draw i of a stream is a pure function of (key, i), so a stream can be
/// re-derived anywhere and replayed exactly. Children are derived by
/// extending the path; siblings never share state. A single SeedStream
/// object is single-consumer.
class SeedStream {
 public:
  SeedStream() : SeedStream(0, {}) {}

  SeedStream(std::uint64_t root, std::vector<std::uint64_t> path)
      : root_(root), path_(std::move(path)) {
    std::uint64_t h = detail::mix64(root_ ^ 0x243F6A8885A308D3ULL);
    for (std::size_t i = 0; i < path_.size(); ++i) {
      h = detail::mix64(h ^ detail::mix64(path_[i] + detail::kGolden * (i + 1)));
    }
    key0_ = h;
    key1_ = detail::mix64(h ^ 0x13198A2E03707344ULL);
  }

  std::uint64_t root() const { return root_; }
  const std::vector<std::uint64_t>& path() const { return path_; }
  std::uint64_t position() const { return counter_; }

  /// Stream at path + [label]. Does not consume draws from this stream.
  SeedStream child(std::uint64_t label) const {
    auto p = path_;
    p.push_back(label);
    return SeedStream(root_, std::move(p));
  }

  std::uint64_t next_u64() {
    std::uint64_t z = detail::mix64(key0_ + detail::kGolden * ++counter_);
    return detail::mix64(z ^ key1_);
  }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi). Returns lo when the interval is degenerate.
  double uniform(double lo, double hi) {
    const double u = uniform();
    return lo == hi ? lo : lo + (hi - lo) * u;
  }

  /// Uniform integer in the half-open range [lo, hi), unbiased (Lemire).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo);
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * span;
    std::uint64_t low = static_cast<std::uint64_t>(m);
    if (low < span) {
      const std::uint64_t threshold = (0 - span) % span;
      while (low < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * span;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return lo + static_cast<std::int64_t>(m >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // UniformRandomBitGenerator, so std::shuffle and friends accept a stream.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

 private:
  std::uint64_t root_;
  std::vector<std::uint64_t> path_;
  std::uint64_t key0_ = 0;
  std::uint64_t key1_ = 0;
  std::uint64_t counter_ = 0;
};

inline SeedStream derive_stream(std::uint64_t root, std::vector<std::uint64_t> labels) {
  return SeedStream(root, std::move(labels));
}

/// Fisher-Yates driven by the stream; identical across standard libraries,
/// unlike std::shuffle.
template <typename T>
void shuffle(std::vector<T>& items, SeedStream& stream) {
  for (std::size_t i = items.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(stream.uniform_int(0, static_cast<std::int64_t>(i)));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace sonarcount
