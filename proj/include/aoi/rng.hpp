#pragma once

#include <cstdint>

namespace aoi {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Counter-based generator (splitmix64 over a keyed counter), so a draw is a
/// pure function of (seed, stream, counter) and sequences are identical on
/// every platform. Stream convention used by the simulator:
///   stream 0 — arrival coin flips, stream 1 — update size draws.
class SplitRng {
 public:
  SplitRng(std::uint64_t seed, std::uint64_t stream)
      : key_(detail::mix64(seed + 0x9e3779b97f4a7c15ULL) ^
             detail::mix64(stream * 0xd2b74407b1ce6e93ULL + 1)) {}

  std::uint64_t next_u64() {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(key_ + counter_);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return next_unit() < p; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Deterministic seed derivation for replication r of sweep point i.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t point,
                                 std::uint64_t rep) {
  return detail::mix64(base ^ detail::mix64(point + 0x632be59bd9b4e019ULL) ^
                       detail::mix64(rep * 0x9e3779b97f4a7c15ULL + 3));
}

}  // namespace aoi
