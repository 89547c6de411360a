#include "bilbao/rng.hpp"

#include <cmath>
#include <numbers>

namespace bilbao {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : key_(mix64(mix64(master_seed + kGolden) ^ (stream_id * 0xD1B54A32D192ED03ULL + 1))) {}

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream RngStream::fork(std::uint64_t tag) const {
  return RngStream(FromKey{}, mix64(key_ ^ mix64(tag + 0x632BE59BD9B4E019ULL)));
}

}  // namespace bilbao
