#pragma once

#include <cstdint>

#include "psnis/patch_model.hpp"
#include "psnis/poisson.hpp"

namespace psnis {

/// Every tunable of training and denoising. Defaults follow the published
/// operating point: K = 20 clusters, 300 samples for the patch estimate, 30
/// per cluster for cluster selection, two alternating rounds, 8x8 patches
/// taken every 2 pixels.
struct DenoiseConfig {
  int k_count = 20;
  int n1 = 300;
  int n2 = 30;
  int outer_iters = 2;
  int patch_size = 8;
  int stride = 2;
  double peak = 10.0;
  std::uint64_t seed = 0;
  double epsilon_floor = kDefaultEpsilonFloor;
  double epsilon_ridge_scale = kDefaultRidgeScale;
  int cem_iters = 10;
  /// Patch-sweep threads (0 = hardware concurrency). Never changes results.
  int workers = 1;

  /// Throws InvalidArgument when any field is out of range.
  void validate() const;
};

}  // namespace psnis
