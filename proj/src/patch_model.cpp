#include "psnis/patch_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "psnis/errors.hpp"

namespace psnis {

Matrix regularize_covariance(const Matrix& raw, double epsilon_ridge) {
  if (raw.rows() != raw.cols()) {
    throw InvalidArgument("regularize_covariance: matrix is not square");
  }
  Matrix out = raw;
  out.diagonal().array() += epsilon_ridge;
  return out;
}

double trace_scaled_ridge(const Matrix& covariance, double ridge_scale) {
  const double m = static_cast<double>(covariance.rows());
  const double per_pixel = m > 0 ? covariance.trace() / m : 0.0;
  return ridge_scale * std::max(per_pixel, kMinRidgeVariance);
}

ClusterModel::ClusterModel(Vector mean, Matrix covariance, Matrix members,
                           double ridge)
    : mean_(std::move(mean)),
      covariance_(std::move(covariance)),
      members_(std::move(members)),
      ridge_(ridge) {
  const auto m = mean_.size();
  if (covariance_.rows() != m || covariance_.cols() != m) {
    throw InvalidArgument("ClusterModel: covariance is " +
                          std::to_string(covariance_.rows()) + "x" +
                          std::to_string(covariance_.cols()) +
                          ", expected " + std::to_string(m));
  }
  if (members_.cols() == 0) {
    throw ModelDegenerate("ClusterModel: empty member roster");
  }
  if (members_.rows() != m) {
    throw InvalidArgument("ClusterModel: member dimension mismatch");
  }
  if (!(ridge_ >= 0.0)) {
    throw InvalidArgument("ClusterModel: ridge must be nonnegative");
  }

  Eigen::LLT<Matrix> llt(regularize_covariance(covariance_, ridge_));
  if (llt.info() != Eigen::Success) {
    throw ModelDegenerate(
        "ClusterModel: regularized covariance is not positive definite "
        "(cluster too small?)");
  }
  chol_ = llt.matrixL();
  const double log_det = 2.0 * chol_.diagonal().array().log().sum();
  if (!std::isfinite(log_det)) {
    throw ModelDegenerate("ClusterModel: singular covariance");
  }
  log_normalizer_ =
      -0.5 * (static_cast<double>(m) * std::log(2.0 * std::numbers::pi) +
              log_det);
}

ClusterModel ClusterModel::from_sample(Vector mean, Matrix covariance,
                                       Matrix members, double ridge_scale) {
  const double ridge = trace_scaled_ridge(covariance, ridge_scale);
  return ClusterModel(std::move(mean), std::move(covariance),
                      std::move(members), ridge);
}

Matrix ClusterModel::regularized_covariance() const {
  return regularize_covariance(covariance_, ridge_);
}

PriorModel::PriorModel(std::vector<ClusterModel> clusters, int patch_size,
                       std::uint64_t training_seed, double epsilon_ridge)
    : clusters_(std::move(clusters)),
      patch_size_(patch_size),
      training_seed_(training_seed),
      epsilon_ridge_(epsilon_ridge) {
  if (patch_size_ < 1) {
    throw InvalidArgument("PriorModel: patch_size must be >= 1");
  }
  if (clusters_.empty()) {
    throw InvalidArgument("PriorModel: no clusters");
  }
  for (const auto& c : clusters_) {
    if (c.dim() != dim()) {
      throw InvalidArgument("PriorModel: cluster dimension " +
                            std::to_string(c.dim()) + " != patch_size^2 " +
                            std::to_string(dim()));
    }
  }
}

const ClusterModel& PriorModel::cluster(int k) const {
  if (k < 0 || k >= k_count()) {
    throw InvalidArgument("PriorModel: cluster index " + std::to_string(k) +
                          " out of range");
  }
  return clusters_[static_cast<std::size_t>(k)];
}

double gaussian_logpdf(const Vector& x, const ClusterModel& cluster) {
  if (x.size() != cluster.dim()) {
    throw InvalidArgument("gaussian_logpdf: x has dimension " +
                          std::to_string(x.size()) + ", cluster has " +
                          std::to_string(cluster.dim()));
  }
  const Vector z = cluster.chol_factor()
                       .triangularView<Eigen::Lower>()
                       .solve(x - cluster.mean());
  return cluster.log_normalizer() - 0.5 * z.squaredNorm();
}

Vector gaussian_logpdf_columns(const Matrix& points,
                               const ClusterModel& cluster) {
  if (points.rows() != cluster.dim()) {
    throw InvalidArgument("gaussian_logpdf_columns: dimension mismatch");
  }
  Matrix centered = points.colwise() - cluster.mean();
  cluster.chol_factor().triangularView<Eigen::Lower>().solveInPlace(centered);
  Vector out = centered.colwise().squaredNorm().transpose();
  out = (cluster.log_normalizer() - 0.5 * out.array()).matrix();
  return out;
}

}  // namespace psnis
