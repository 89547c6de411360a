#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "bilbao/rng.hpp"

namespace bilbao {

/// Largest dimension with built-in direction numbers.
inline constexpr int kSobolMaxDimension = 16;

/// First `n` points of the unscrambled Sobol sequence (Joe-Kuo direction
/// numbers), one point per row. Point 0 is the origin.
Eigen::MatrixXd sobol_points_unscrambled(int d, int n);

/// First `n` points of an Owen-scrambled Sobol sequence in [0,1)^d.
///
/// One 64-bit scramble seed per dimension is drawn from `stream`, so two
/// calls with equal stream state give identical matrices.
Eigen::MatrixXd sobol_points(int d, int n, RngStream& stream);

/// Nested uniform (Owen) scramble of a 32-bit fixed-point coordinate.
std::uint32_t owen_scramble(std::uint32_t value, std::uint32_t seed);

}  // namespace bilbao
