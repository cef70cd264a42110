#pragma once

// Synthetic data shared by unit and acceptance tests.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "psnis/image_grid.hpp"
#include "psnis/image_pipeline.hpp"
#include "psnis/patch_model.hpp"
#include "psnis/prior_learning.hpp"

namespace psnis::synth {

struct LabeledSet {
  TrainingSet train;
  std::vector<int> truth;
};

/// Two isotropic clouds whose means are `distance` apart, spread `spread`.
/// Entries stay positive (centers offset from the origin).
inline LabeledSet two_clouds(int per_cloud, int patch_size, double distance,
                             double spread, std::uint64_t seed) {
  const int m = patch_size * patch_size;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, spread);
  LabeledSet out;
  out.train.patch_size = patch_size;
  out.train.source_count = 1;
  out.train.patches.resize(m, 2 * per_cloud);
  const double offset = distance / std::sqrt(static_cast<double>(m));
  for (int j = 0; j < 2 * per_cloud; ++j) {
    const int cloud = j % 2;
    for (int i = 0; i < m; ++i) {
      out.train.patches(i, j) = 10.0 + cloud * offset + noise(gen);
    }
    out.truth.push_back(cloud);
  }
  return out;
}

/// K anisotropic Gaussian clouds in m dimensions with well-separated means.
inline LabeledSet gaussian_mixture(int n, int patch_size, int k,
                                   std::uint64_t seed) {
  const int m = patch_size * patch_size;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> center(20.0, 80.0);
  std::uniform_real_distribution<double> scale(0.5, 3.0);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> factors;
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd mu(m);
    for (int i = 0; i < m; ++i) mu[i] = center(gen);
    Eigen::MatrixXd a(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) a(i, j) = (i == j ? scale(gen) : 0.3 * z(gen));
    }
    means.push_back(mu);
    factors.push_back(a);
  }
  LabeledSet out;
  out.train.patch_size = patch_size;
  out.train.source_count = 1;
  out.train.patches.resize(m, n);
  for (int j = 0; j < n; ++j) {
    const int c = j % k;
    Eigen::VectorXd e(m);
    for (int i = 0; i < m; ++i) e[i] = z(gen);
    out.train.patches.col(j) = (means[c] + factors[c] * e).cwiseMax(0.0);
    out.truth.push_back(c);
  }
  return out;
}

/// 64x64-style image with two textures split at a random column: horizontal
/// stripes (period 8) on the left, a separable sinusoid blob pattern
/// (period 16) on the right. Values in [0.1, 1] times 255.
inline ImageGrid two_texture_image(int size, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_int_distribution<int> split(size / 3, 2 * size / 3);
  const double p1 = phase(gen), p2 = phase(gen), p3 = phase(gen);
  const int boundary = split(gen);
  std::vector<double> px(static_cast<std::size_t>(size) * size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      double v;
      if (c < boundary) {
        v = 0.55 + 0.45 * std::sin(2.0 * std::numbers::pi * r / 8.0 + p1);
      } else {
        v = 0.55 + 0.45 * std::sin(2.0 * std::numbers::pi * c / 16.0 + p2) *
                       std::sin(2.0 * std::numbers::pi * r / 16.0 + p3);
      }
      px[static_cast<std::size_t>(r) * size + c] = 255.0 * std::max(v, 0.1);
    }
  }
  return ImageGrid(size, size, std::move(px));
}

inline std::vector<ImageGrid> class_corpus(int count, int size,
                                           std::uint64_t seed) {
  std::vector<ImageGrid> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(two_texture_image(size, seed * 1000003ULL + static_cast<std::uint64_t>(i)));
  }
  return out;
}

/// Training set of all stride-1 patches of the images after scaling to peak.
inline TrainingSet corpus_patches(const std::vector<ImageGrid>& images,
                                  double peak, int patch_size, int stride = 1) {
  std::vector<Patch> all;
  for (const auto& img : images) {
    auto p = extract_patches(scale_to_peak(img, peak), patch_size, stride);
    all.insert(all.end(), p.begin(), p.end());
  }
  return TrainingSet::from_patches(all, patch_size, static_cast<int>(images.size()));
}

/// Prior whose cluster k has exactly the patches in pools[k] as members.
inline PriorModel model_from_pools(
    const std::vector<std::vector<Eigen::VectorXd>>& pools, int patch_size,
    double ridge_scale = kDefaultRidgeScale) {
  std::vector<ClusterModel> clusters;
  for (const auto& pool : pools) {
    Eigen::MatrixXd members(pool.front().size(), static_cast<Eigen::Index>(pool.size()));
    for (std::size_t j = 0; j < pool.size(); ++j) {
      members.col(static_cast<Eigen::Index>(j)) = pool[j];
    }
    auto params = estimate_cluster_params(members);
    clusters.push_back(ClusterModel::from_sample(params.mean, params.covariance,
                                                 members, ridge_scale));
  }
  return PriorModel(std::move(clusters), patch_size, 0, ridge_scale);
}

}  // namespace psnis::synth
