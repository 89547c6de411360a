#include "bilbao/sobol.hpp"

#include <array>
#include <string>
#include <vector>

#include "bilbao/errors.hpp"

namespace bilbao {

namespace {

struct DirectionSpec {
  int degree;
  std::uint32_t poly;
  std::array<std::uint32_t, 8> m;
};

// new-joe-kuo-6.21201, dimensions 2..16.
constexpr std::array<DirectionSpec, kSobolMaxDimension - 1> kDirections{{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
}};

constexpr int kBits = 32;

std::array<std::uint32_t, kBits> direction_vector(int dim) {
  std::array<std::uint32_t, kBits> v{};
  if (dim == 0) {
    for (int i = 0; i < kBits; ++i) v[i] = 1u << (kBits - 1 - i);
    return v;
  }
  const DirectionSpec& spec = kDirections[dim - 1];
  const int s = spec.degree;
  for (int i = 0; i < s; ++i) v[i] = spec.m[i] << (kBits - 1 - i);
  for (int i = s; i < kBits; ++i) {
    v[i] = v[i - s] ^ (v[i - s] >> s);
    for (int k = 1; k < s; ++k) {
      if ((spec.poly >> (s - 1 - k)) & 1u) v[i] ^= v[i - k];
    }
  }
  return v;
}

void check_shape(int d, int n) {
  if (d < 1 || d > kSobolMaxDimension)
    throw ConfigError("sobol dimension must be in [1, " + std::to_string(kSobolMaxDimension) +
                      "], got " + std::to_string(d));
  if (n < 1) throw ConfigError("sobol point count must be positive");
}

std::uint32_t reverse_bits(std::uint32_t x) {
  x = ((x >> 1) & 0x55555555u) | ((x & 0x55555555u) << 1);
  x = ((x >> 2) & 0x33333333u) | ((x & 0x33333333u) << 2);
  x = ((x >> 4) & 0x0F0F0F0Fu) | ((x & 0x0F0F0F0Fu) << 4);
  x = ((x >> 8) & 0x00FF00FFu) | ((x & 0x00FF00FFu) << 8);
  return (x >> 16) | (x << 16);
}

std::vector<std::uint32_t> sobol_integers(int dim, int n) {
  const auto v = direction_vector(dim);
  std::vector<std::uint32_t> out(static_cast<std::size_t>(n));
  std::uint32_t x = 0;
  out[0] = 0;
  // Gray-code order visits the same set as the natural order for each 2^k prefix.
  for (int i = 1; i < n; ++i) {
    int c = 0;
    for (std::uint32_t value = static_cast<std::uint32_t>(i - 1); value & 1u; value >>= 1) ++c;
    x ^= v[c];
    out[i] = x;
  }
  return out;
}

}  // namespace

std::uint32_t owen_scramble(std::uint32_t value, std::uint32_t seed) {
  // Hash-based Laine-Karras permutation on the reversed bits: each output bit
  // depends only on the more significant input bits.
  std::uint32_t x = reverse_bits(value);
  x ^= x * 0x3d20adeau;
  x += seed;
  x *= (seed >> 16) | 1u;
  x ^= x * 0x05526c56u;
  x ^= x * 0x53a22864u;
  return reverse_bits(x);
}

Eigen::MatrixXd sobol_points_unscrambled(int d, int n) {
  check_shape(d, n);
  Eigen::MatrixXd points(n, d);
  for (int j = 0; j < d; ++j) {
    const auto ints = sobol_integers(j, n);
    for (int i = 0; i < n; ++i) points(i, j) = static_cast<double>(ints[i]) * 0x1.0p-32;
  }
  return points;
}

Eigen::MatrixXd sobol_points(int d, int n, RngStream& stream) {
  check_shape(d, n);
  Eigen::MatrixXd points(n, d);
  for (int j = 0; j < d; ++j) {
    const auto seed = static_cast<std::uint32_t>(stream.next_u64() >> 32);
    const auto ints = sobol_integers(j, n);
    for (int i = 0; i < n; ++i)
      points(i, j) = static_cast<double>(owen_scramble(ints[i], seed)) * 0x1.0p-32;
  }
  return points;
}

}  // namespace bilbao
