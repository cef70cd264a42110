#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "psnis/config.hpp"
#include "psnis/patch_model.hpp"
#include "psnis/poisson.hpp"

namespace psnis {

/// Key of the random draws made for one noisy patch. Together with the
/// cluster, the round and the stream it fully determines which pool members
/// are drawn, so patches can be processed in any order or thread.
struct SamplerState {
  std::uint64_t seed = 0;
  std::uint64_t patch_index = 0;
};

/// Cluster selection and the patch estimate draw from independent streams.
enum class SampleStream : std::uint64_t {
  kClusterSelection = 1,
  kEstimate = 2,
};

struct PatchEstimate {
  Vector values;
  int cluster = 0;
  /// Effective sample size of the final estimate's weights.
  double ess = 0.0;
  int row = 0;
  int col = 0;
  /// Cluster chosen in each outer round; padded with the final cluster when
  /// the alternation stopped early.
  std::vector<int> cluster_history;
  /// Set when every likelihood underflowed and the nearest-mean fallback
  /// produced the estimate.
  bool fallback = false;
};

struct ClusterSelection {
  int cluster = 0;
  /// Estimated expected squared error per cluster; +inf where no drawn
  /// sample had a finite likelihood.
  std::vector<double> scores;
  bool fallback = false;
};

struct MmseResult {
  Vector values;
  double ess = 0.0;
  /// Cluster whose pool produced `values` (differs from the requested one
  /// only in the fallback case).
  int cluster = 0;
  bool fallback = false;
};

/// Pool member indices for one (state, k, round, stream) key: `n` uniform
/// draws with replacement, or every member once (in roster order) when the
/// pool has at most `n` members.
std::vector<Eigen::Index> draw_cluster_indices(Eigen::Index pool_size, int n,
                                               const SamplerState& state,
                                               int k, int round,
                                               SampleStream stream);

std::vector<Patch> draw_cluster_samples(
    const PriorModel& model, int k, int n, const SamplerState& state,
    int round, SampleStream stream = SampleStream::kEstimate);

/// Per-patch alternating minimization against a fixed prior. Caches the
/// floored logarithms of every pool member so each likelihood costs one
/// sparse dot product over the nonzero counts. The model must outlive the
/// denoiser; all methods are const and thread-safe.
class PatchDenoiser {
 public:
  PatchDenoiser(const PriorModel& model, const DenoiseConfig& cfg);

  const PriorModel& model() const { return model_; }
  const DenoiseConfig& config() const { return cfg_; }

  /// ln p(y | x_j) for the listed members of cluster k.
  std::vector<double> log_likelihoods(const NoisyPatch& y, int k,
                                      std::span<const Eigen::Index> members) const;

  /// For every cluster, the self-normalized estimate of E[||x - u||^2 | y, k]
  /// over n2 drawn members; returns the argmin (ties to the lowest index).
  ClusterSelection select_cluster(const NoisyPatch& y, const Vector& u,
                                  const SamplerState& state, int round) const;

  /// Self-normalized posterior mean of the clean patch over n1 members of
  /// cluster k, weighted by the Poisson likelihood of y.
  MmseResult mmse_estimate(const NoisyPatch& y, int k,
                           const SamplerState& state, int round) const;

  /// Starts from u = y and alternates select_cluster / mmse_estimate for
  /// cfg.outer_iters rounds, stopping early once the cluster repeats and the
  /// estimate moved by less than 1e-9 (max norm).
  PatchEstimate denoise(const NoisyPatch& y, const SamplerState& state) const;

  /// Degenerate-weight fallback: cluster whose mean is nearest to y
  /// (Euclidean), and that cluster's pool average.
  MmseResult nearest_mean_fallback(const NoisyPatch& y) const;

 private:
  struct Pool {
    Matrix log_values;   // ln max(x, floor), one column per member
    Vector clamped_sum;  // sum_j max(x_j, floor) per member
    Vector average;
  };

  void check_patch(const NoisyPatch& y) const;

  const PriorModel& model_;
  DenoiseConfig cfg_;
  std::vector<Pool> pools_;
};

ClusterSelection select_cluster(const NoisyPatch& y, const Vector& u,
                                const PriorModel& model, int n2,
                                const SamplerState& state, int round,
                                double epsilon_floor = kDefaultEpsilonFloor);

MmseResult mmse_estimate(const NoisyPatch& y, int k, const PriorModel& model,
                         int n1, const SamplerState& state, int round,
                         double epsilon_floor = kDefaultEpsilonFloor);

PatchEstimate denoise_patch(const NoisyPatch& y, const PriorModel& model,
                            const DenoiseConfig& cfg,
                            const SamplerState& state);

}  // namespace psnis
