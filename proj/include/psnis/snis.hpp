#pragma once

#include <span>
#include <vector>

#include "psnis/errors.hpp"
#include "psnis/patch_model.hpp"

namespace psnis {

/// Log-weights more than this far below the maximum are raised to
/// (max - kLogWeightSpan) before exponentiation.
inline constexpr double kLogWeightSpan = 700.0;

/// Importance weights (log domain) paired with the values being averaged.
template <class Payload>
struct WeightedSampleSet {
  std::vector<double> log_weights;
  std::vector<Payload> payloads;
};

/// w_j = exp(lw_j - logsumexp(lw)) after flooring at max - kLogWeightSpan.
/// Entries equal to -inf are allowed as long as one entry is finite; they get
/// the floor weight. Throws InvalidArgument on empty input, NaN, +inf or when
/// every entry is -inf.
std::vector<double> normalize_weights(std::span<const double> log_weights);

/// 1 / sum_j w_j^2 of the normalized weights; in [1, n].
double effective_sample_size(std::span<const double> log_weights);
double effective_sample_size_normalized(std::span<const double> weights);

/// True if at least one log-weight is finite (normalize_weights can run).
bool has_finite_weight(std::span<const double> log_weights);

/// sum_j payload_j * w_j with w from normalize_weights. Works for any payload
/// supporting `payload * double` and `+=` (double, Eigen vectors).
template <class Payload>
Payload snis_estimate(std::span<const double> log_weights,
                      std::span<const Payload> payloads) {
  if (log_weights.size() != payloads.size()) {
    throw InvalidArgument("snis_estimate: weight/payload length mismatch");
  }
  const std::vector<double> w = normalize_weights(log_weights);
  Payload acc = payloads[0] * w[0];
  for (std::size_t j = 1; j < w.size(); ++j) acc += payloads[j] * w[j];
  return acc;
}

template <class Payload>
Payload snis_estimate(const WeightedSampleSet<Payload>& samples) {
  return snis_estimate<Payload>(samples.log_weights, samples.payloads);
}

/// Vector payloads stored as the columns of `payloads`.
Vector snis_estimate_columns(std::span<const double> log_weights,
                             const Matrix& payloads);

/// Vector payloads pool.col(columns[j]). When `weights_out` is non-null it
/// receives the normalized weights.
Vector snis_estimate_columns(std::span<const double> log_weights,
                             const Matrix& pool,
                             std::span<const Eigen::Index> columns,
                             std::vector<double>* weights_out = nullptr);

}  // namespace psnis
