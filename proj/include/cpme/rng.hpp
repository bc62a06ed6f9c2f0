#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace cpme {

/// Counter-based Philox4x32-10 generator (Salmon et al., SC'11).
///
/// The 64-bit seed is the Philox key. The 128-bit counter is split into a
/// 64-bit block index (low words) and a 64-bit stream id (high words), so
/// distinct streams of the same seed never share a counter value. Every
/// derived quantity (uniforms, normals, integers) is computed here rather
/// than by <random> distributions, whose algorithms are implementation
/// defined; output sequences are therefore identical across platforms.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  /// Next 64 raw bits.
  result_type operator()();

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  double uniform(double lo, double hi);
  /// Standard normal by the polar method; variates come in pairs and the
  /// second of each pair is returned by the next call.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Logistic(location, scale) by inversion.
  double logistic(double location, double scale);
  /// Unbiased integer in [0, n), Lemire's multiply-and-reject.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

  /// Child generator on an independent stream. Depends only on
  /// (seed, stream, tag), never on how far this generator has advanced.
  Rng split(std::uint64_t tag) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;  // 32-bit words consumed from buffer_
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; used to hash stream tags.
std::uint64_t mix64(std::uint64_t x);

/// Stable stream tag from a list of integers (order sensitive).
std::uint64_t stream_tag(std::span<const std::uint64_t> parts);

/// Fisher-Yates shuffle driven by Rng::below.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.below(i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

}  // namespace cpme
