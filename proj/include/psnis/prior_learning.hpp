#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "psnis/patch_model.hpp"

namespace psnis {

/// Clean training patches, one per column of `patches` (m = patch_size^2
/// rows), already at the intensity scale of the target peak.
struct TrainingSet {
  int patch_size = 0;
  Matrix patches;
  int source_count = 0;

  int dim() const { return patch_size * patch_size; }
  Eigen::Index size() const { return patches.cols(); }

  static TrainingSet from_patches(std::span<const Patch> patches,
                                  int patch_size, int source_count);
  /// Throws InvalidArgument if empty, mis-shaped, or any entry is negative.
  void validate() const;
};

/// One cluster label per training patch, each in [0, K).
struct Assignment {
  std::vector<int> labels;
};

struct ClusterParams {
  Vector mean;
  /// Sample covariance with denominator max(n - 1, 1), before the ridge.
  Matrix covariance;
};

struct LearnOptions {
  int k = 20;
  int cem_iters = 10;
  std::uint64_t seed = 0;
  double epsilon_ridge = kDefaultRidgeScale;
  int kmeans_max_iters = 100;
  /// Threads for the assignment and parameter steps; results do not depend
  /// on it.
  int workers = 1;
};

/// Per-round diagnostics of a CEM run.
struct CemTrace {
  /// Classification log-likelihood after each (re-estimate, re-assign) round.
  std::vector<double> objective;
  /// Number of patches whose label changed in each round.
  std::vector<std::size_t> changed;
  /// Empty clusters refilled in each round.
  std::vector<std::size_t> repaired;
  bool fixed_point = false;
};

/// Lloyd's algorithm with k-means++ seeding on Euclidean distance, run until
/// the labels stop changing or `max_iters` passes. Clusters left empty are
/// refilled with the point farthest from its centroid.
Assignment kmeans_init(const TrainingSet& train, int k, std::uint64_t seed,
                       int max_iters = 100);

ClusterParams estimate_cluster_params(const Matrix& members);
ClusterParams estimate_cluster_params(std::span<const Patch> members);

/// Classification EM from a given starting partition. Each round
/// re-estimates every cluster's Gaussian from its members and then moves
/// every patch to the cluster under which it is most likely (ties go to the
/// lower index). A cluster left empty takes the patch with the lowest
/// likelihood under its current cluster. Stops early at a fixed point.
PriorModel run_cem(const TrainingSet& train, const Assignment& initial,
                   const LearnOptions& options, CemTrace* trace = nullptr);

/// kmeans_init followed by run_cem.
PriorModel learn_prior(const TrainingSet& train, const LearnOptions& options,
                       CemTrace* trace = nullptr);
PriorModel learn_prior(const TrainingSet& train, int k, int cem_iters,
                       std::uint64_t seed);

/// argmax_k gaussian_logpdf(x, cluster k); ties go to the lowest index.
int assign_clean_patch(const Vector& x, const PriorModel& model);

/// Labels of every training patch under the model (assign_clean_patch over
/// the set).
Assignment assign_all(const TrainingSet& train, const PriorModel& model,
                      int workers = 1);

/// sum_j log N(x_j; mu_{label j}, Sigma_{label j}).
double classification_loglik(const TrainingSet& train,
                             const Assignment& assignment,
                             const PriorModel& model);

}  // namespace psnis
