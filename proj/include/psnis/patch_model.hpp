#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace psnis {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A flattened square patch (row-major within the patch) and the grid
/// position of its top-left pixel in the source image.
struct Patch {
  Vector values;
  int row = 0;
  int col = 0;
};

/// Smallest per-pixel variance the trace-scaled ridge is computed from, so a
/// cluster of identical patches still gets a positive-definite covariance.
inline constexpr double kMinRidgeVariance = 1e-6;

/// Default ridge scale: ridge = scale * trace(covariance) / m.
inline constexpr double kDefaultRidgeScale = 1e-3;

/// raw + epsilon_ridge * I. Throws InvalidArgument for non-square input.
Matrix regularize_covariance(const Matrix& raw, double epsilon_ridge);

/// Trace-scaled ridge used for learned clusters:
/// scale * max(trace(covariance) / m, kMinRidgeVariance).
double trace_scaled_ridge(const Matrix& covariance, double ridge_scale);

/// One Gaussian component of the patch prior together with the training
/// patches assigned to it. Immutable once built; the Cholesky factor of the
/// regularized covariance is computed in the constructor.
class ClusterModel {
 public:
  /// `members` holds one patch per column. `ridge` is the absolute value
  /// added to the diagonal before factorization. Throws ModelDegenerate when
  /// the roster is empty or the regularized covariance is not positive
  /// definite, InvalidArgument on dimension mismatch.
  ClusterModel(Vector mean, Matrix covariance, Matrix members, double ridge);

  /// Ridge derived from `ridge_scale` via trace_scaled_ridge.
  static ClusterModel from_sample(Vector mean, Matrix covariance,
                                  Matrix members, double ridge_scale);

  int dim() const { return static_cast<int>(mean_.size()); }
  int size() const { return static_cast<int>(members_.cols()); }

  const Vector& mean() const { return mean_; }
  /// Sample covariance as estimated (without the ridge).
  const Matrix& covariance() const { return covariance_; }
  Matrix regularized_covariance() const;
  double ridge() const { return ridge_; }
  /// Lower-triangular L with L * L^T = covariance + ridge * I.
  const Matrix& chol_factor() const { return chol_; }
  const Matrix& members() const { return members_; }
  /// -0.5 * (m * ln(2 pi) + ln det(regularized covariance)).
  double log_normalizer() const { return log_normalizer_; }

 private:
  Vector mean_;
  Matrix covariance_;
  Matrix members_;
  double ridge_ = 0.0;
  Matrix chol_;
  double log_normalizer_ = 0.0;
};

/// The learned class prior: K clusters plus training metadata.
class PriorModel {
 public:
  PriorModel(std::vector<ClusterModel> clusters, int patch_size,
             std::uint64_t training_seed, double epsilon_ridge);

  const std::vector<ClusterModel>& clusters() const { return clusters_; }
  const ClusterModel& cluster(int k) const;
  int patch_size() const { return patch_size_; }
  int dim() const { return patch_size_ * patch_size_; }
  int k_count() const { return static_cast<int>(clusters_.size()); }
  std::uint64_t training_seed() const { return training_seed_; }
  /// Ridge scale the clusters were regularized with.
  double epsilon_ridge() const { return epsilon_ridge_; }

 private:
  std::vector<ClusterModel> clusters_;
  int patch_size_ = 0;
  std::uint64_t training_seed_ = 0;
  double epsilon_ridge_ = kDefaultRidgeScale;
};

/// log N(x; mean, covariance + ridge * I), evaluated through the cached
/// Cholesky factor.
double gaussian_logpdf(const Vector& x, const ClusterModel& cluster);

/// gaussian_logpdf for every column of `points`.
Vector gaussian_logpdf_columns(const Matrix& points, const ClusterModel& cluster);

}  // namespace psnis
