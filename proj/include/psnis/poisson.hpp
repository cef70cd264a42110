#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "psnis/image_grid.hpp"
#include "psnis/patch_model.hpp"

namespace psnis {

/// Clean intensities below this are clamped inside the likelihood, so a zero
/// pixel in a training patch cannot drive a log-weight to -inf.
inline constexpr double kDefaultEpsilonFloor = 1e-6;

/// Observed photon counts for one patch.
struct NoisyPatch {
  std::vector<std::int64_t> counts;
  int row = 0;
  int col = 0;

  Vector as_real() const;
};

/// sum_j ln(y_j!) computed with lgamma.
double log_factorial_sum(std::span<const std::int64_t> counts);

/// ln P(y | x) under independent Poisson pixels:
///   sum_j [ -x~_j + y_j ln x~_j - ln(y_j!) ],  x~_j = max(x_j, epsilon_floor).
/// Terms with y_j = 0 reduce to -x~_j. With epsilon_floor = 0 a pixel with
/// y_j > 0 and x_j = 0 yields -inf.
double poisson_loglik(std::span<const std::int64_t> counts, const Vector& x,
                      double epsilon_floor = kDefaultEpsilonFloor);

double poisson_loglik(const NoisyPatch& y, const Patch& x,
                      double epsilon_floor = kDefaultEpsilonFloor);

/// Independent Poisson(x_pixel) draw for every pixel, in raster order from a
/// single generator seeded with `seed`. Zero intensity always gives zero.
ImageGrid sample_poisson_image(const ImageGrid& intensities,
                               std::uint64_t seed);

}  // namespace psnis
