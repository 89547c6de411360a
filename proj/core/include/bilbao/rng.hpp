#pragma once

#include <cstdint>

namespace bilbao {

/// Counter-based random stream.
///
/// A stream is identified by (master_seed, stream_id) and carries only a
/// counter, so it can be copied, replayed and forked without shared state.
/// Each draw hashes (key, counter) through the SplitMix64 finalizer.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller (one output per pair of uniforms).
  double normal();

  /// Child stream addressed by `tag`. Does not advance this stream.
  [[nodiscard]] RngStream fork(std::uint64_t tag) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  struct FromKey {};
  RngStream(FromKey, std::uint64_t key) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace bilbao
