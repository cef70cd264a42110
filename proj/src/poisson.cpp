#include "psnis/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "psnis/errors.hpp"

namespace psnis {

Vector NoisyPatch::as_real() const {
  Vector v(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = static_cast<double>(counts[i]);
  }
  return v;
}

double log_factorial_sum(std::span<const std::int64_t> counts) {
  double s = 0.0;
  for (auto y : counts) {
    if (y < 0) throw InvalidArgument("poisson: negative count");
    if (y > 1) s += std::lgamma(static_cast<double>(y) + 1.0);
  }
  return s;
}

double poisson_loglik(std::span<const std::int64_t> counts, const Vector& x,
                      double epsilon_floor) {
  if (static_cast<Eigen::Index>(counts.size()) != x.size()) {
    throw InvalidArgument("poisson_loglik: y has " +
                          std::to_string(counts.size()) + " entries, x has " +
                          std::to_string(x.size()));
  }
  double s = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const auto y = counts[j];
    if (y < 0) throw InvalidArgument("poisson_loglik: negative count");
    const double xf = std::max(x[static_cast<Eigen::Index>(j)], epsilon_floor);
    s -= xf;
    if (y > 0) {
      const double yd = static_cast<double>(y);
      s += yd * std::log(xf) - std::lgamma(yd + 1.0);
    }
  }
  return s;
}

double poisson_loglik(const NoisyPatch& y, const Patch& x,
                      double epsilon_floor) {
  return poisson_loglik(y.counts, x.values, epsilon_floor);
}

ImageGrid sample_poisson_image(const ImageGrid& intensities,
                               std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<double> out(intensities.size(), 0.0);
  const auto src = intensities.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double lambda = src[i];
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw InvalidArgument("sample_poisson_image: negative intensity");
    }
    if (lambda == 0.0) continue;
    std::poisson_distribution<std::int64_t> dist(lambda);
    out[i] = static_cast<double>(dist(gen));
  }
  return ImageGrid(intensities.width(), intensities.height(), std::move(out));
}

}  // namespace psnis
