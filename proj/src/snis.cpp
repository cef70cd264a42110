#include "psnis/snis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace psnis {

bool has_finite_weight(std::span<const double> log_weights) {
  return std::any_of(log_weights.begin(), log_weights.end(),
                     [](double v) { return std::isfinite(v); });
}

std::vector<double> normalize_weights(std::span<const double> log_weights) {
  if (log_weights.empty()) {
    throw InvalidArgument("normalize_weights: no samples");
  }
  double max_lw = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity()) {
      throw InvalidArgument("normalize_weights: NaN or +inf log-weight");
    }
    max_lw = std::max(max_lw, lw);
  }
  if (!std::isfinite(max_lw)) {
    throw InvalidArgument("normalize_weights: every log-weight is -inf");
  }

  const double floor = max_lw - kLogWeightSpan;
  std::vector<double> w(log_weights.size());
  double total = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = std::exp(std::max(log_weights[j], floor) - max_lw);
    total += w[j];
  }
  // total >= 1 because the maximal entry contributes exp(0).
  for (double& v : w) v /= total;
  return w;
}

double effective_sample_size_normalized(std::span<const double> weights) {
  double s = 0.0;
  for (double v : weights) s += v * v;
  return 1.0 / s;
}

double effective_sample_size(std::span<const double> log_weights) {
  return effective_sample_size_normalized(normalize_weights(log_weights));
}

Vector snis_estimate_columns(std::span<const double> log_weights,
                             const Matrix& payloads) {
  if (static_cast<Eigen::Index>(log_weights.size()) != payloads.cols()) {
    throw InvalidArgument("snis_estimate_columns: weight/payload mismatch");
  }
  const std::vector<double> w = normalize_weights(log_weights);
  Vector acc = payloads.col(0) * w[0];
  for (std::size_t j = 1; j < w.size(); ++j) {
    acc += payloads.col(static_cast<Eigen::Index>(j)) * w[j];
  }
  return acc;
}

Vector snis_estimate_columns(std::span<const double> log_weights,
                             const Matrix& pool,
                             std::span<const Eigen::Index> columns,
                             std::vector<double>* weights_out) {
  if (log_weights.size() != columns.size()) {
    throw InvalidArgument("snis_estimate_columns: weight/payload mismatch");
  }
  std::vector<double> w = normalize_weights(log_weights);
  Vector acc = pool.col(columns[0]) * w[0];
  for (std::size_t j = 1; j < w.size(); ++j) acc += pool.col(columns[j]) * w[j];
  if (weights_out) *weights_out = std::move(w);
  return acc;
}

}  // namespace psnis
