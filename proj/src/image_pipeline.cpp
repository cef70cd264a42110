#include "psnis/image_pipeline.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "psnis/errors.hpp"
#include "psnis/parallel.hpp"

namespace psnis {

void DenoiseConfig::validate() const {
  if (patch_size < 1) throw InvalidArgument("config: patch_size must be >= 1");
  if (stride < 1 || stride > patch_size) {
    throw InvalidArgument("config: stride must be in [1, patch_size]");
  }
  if (!(peak > 0.0) || !std::isfinite(peak)) {
    throw InvalidArgument("config: peak must be > 0");
  }
  if (n1 < 1 || n2 < 1 || k_count < 1) {
    throw InvalidArgument("config: n1, n2 and k must be >= 1");
  }
  if (outer_iters < 1) throw InvalidArgument("config: iters must be >= 1");
  if (cem_iters < 1) throw InvalidArgument("config: cem_iters must be >= 1");
  if (!(epsilon_floor >= 0.0)) {
    throw InvalidArgument("config: epsilon_floor must be >= 0");
  }
  if (!(epsilon_ridge_scale >= 0.0)) {
    throw InvalidArgument("config: epsilon_ridge_scale must be >= 0");
  }
}

ImageGrid scale_to_peak(const ImageGrid& img, double peak) {
  if (!(peak > 0.0) || !std::isfinite(peak)) {
    throw InvalidArgument("scale_to_peak: peak must be > 0");
  }
  const double mx = img.max_value();
  if (!(mx > 0.0)) throw InvalidArgument("scale_to_peak: image is all zero");
  if (mx == peak) return img;
  ImageGrid out = scaled(img, peak / mx);
  // Pin the maximum exactly; the product can land one ulp off.
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (img.pixels()[i] == mx) out.pixels()[i] = peak;
  }
  return out;
}

std::vector<int> patch_offsets(int dim, int patch_size, int stride) {
  if (patch_size < 1 || stride < 1) {
    throw InvalidArgument("patch_offsets: patch_size and stride must be >= 1");
  }
  if (dim < patch_size) {
    throw InvalidArgument("image dimension " + std::to_string(dim) +
                          " is smaller than patch size " +
                          std::to_string(patch_size));
  }
  const int last = dim - patch_size;
  std::vector<int> out;
  for (int p = 0; p < last; p += stride) out.push_back(p);
  out.push_back(last);
  return out;
}

std::vector<Patch> extract_patches(const ImageGrid& img, int patch_size,
                                   int stride) {
  const auto rows = patch_offsets(img.height(), patch_size, stride);
  const auto cols = patch_offsets(img.width(), patch_size, stride);
  std::vector<Patch> out;
  out.reserve(rows.size() * cols.size());
  for (int r : rows) {
    for (int c : cols) {
      Patch p;
      p.row = r;
      p.col = c;
      p.values.resize(static_cast<Eigen::Index>(patch_size) * patch_size);
      Eigen::Index i = 0;
      for (int dr = 0; dr < patch_size; ++dr) {
        for (int dc = 0; dc < patch_size; ++dc) p.values[i++] = img.at(r + dr, c + dc);
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<NoisyPatch> extract_noisy_patches(const ImageGrid& counts,
                                              int patch_size, int stride) {
  for (double v : counts.pixels()) {
    if (v != std::floor(v) || v < 0.0) {
      throw InvalidArgument("noisy image pixels must be nonnegative integers");
    }
  }
  const auto patches = extract_patches(counts, patch_size, stride);
  std::vector<NoisyPatch> out;
  out.reserve(patches.size());
  for (const auto& p : patches) {
    NoisyPatch y;
    y.row = p.row;
    y.col = p.col;
    y.counts.resize(static_cast<std::size_t>(p.values.size()));
    for (Eigen::Index i = 0; i < p.values.size(); ++i) {
      y.counts[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(p.values[i]);
    }
    out.push_back(std::move(y));
  }
  return out;
}

AccumulatorGrid::AccumulatorGrid(int width, int height)
    : width_(width),
      height_(height),
      sum_(static_cast<std::size_t>(width) * height, 0.0),
      count_(static_cast<std::size_t>(width) * height, 0.0) {}

void AccumulatorGrid::add(const Vector& values, int row, int col) {
  const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(values.size()))));
  if (static_cast<Eigen::Index>(side) * side != values.size()) {
    throw InvalidArgument("AccumulatorGrid: patch is not square");
  }
  if (row < 0 || col < 0 || row + side > height_ || col + side > width_) {
    throw InvalidArgument("AccumulatorGrid: patch at (" + std::to_string(row) +
                          ", " + std::to_string(col) + ") falls outside image");
  }
  Eigen::Index i = 0;
  for (int dr = 0; dr < side; ++dr) {
    const std::size_t base = static_cast<std::size_t>(row + dr) * width_ + col;
    for (int dc = 0; dc < side; ++dc) {
      sum_[base + dc] += values[i++];
      count_[base + dc] += 1.0;
    }
  }
}

void AccumulatorGrid::merge(const AccumulatorGrid& other) {
  if (other.width_ != width_ || other.height_ != height_) {
    throw InvalidArgument("AccumulatorGrid: merge dimension mismatch");
  }
  for (std::size_t i = 0; i < sum_.size(); ++i) {
    sum_[i] += other.sum_[i];
    count_[i] += other.count_[i];
  }
}

ImageGrid AccumulatorGrid::resolve() const {
  std::vector<double> out(sum_.size());
  for (std::size_t i = 0; i < sum_.size(); ++i) {
    if (count_[i] <= 0.0) {
      throw ConsistencyError("aggregate: pixel " + std::to_string(i) +
                             " is not covered by any patch");
    }
    out[i] = sum_[i] / count_[i];
  }
  return ImageGrid(width_, height_, std::move(out));
}

ImageGrid aggregate_patches(std::span<const PatchEstimate> estimates, int width,
                            int height) {
  AccumulatorGrid acc(width, height);
  for (const auto& e : estimates) acc.add(e.values, e.row, e.col);
  return acc.resolve();
}

double psnr(const ImageGrid& estimate, const ImageGrid& reference,
            double data_max) {
  if (estimate.width() != reference.width() ||
      estimate.height() != reference.height()) {
    throw InvalidArgument("psnr: image dimensions differ");
  }
  if (!(data_max > 0.0)) throw InvalidArgument("psnr: data_max must be > 0");
  if (estimate.size() == 0) throw InvalidArgument("psnr: empty images");
  double sse = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = estimate.pixels()[i] - reference.pixels()[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(estimate.size());
  return 10.0 * std::log10(data_max * data_max / mse);
}

DenoiseResult denoise_image_detailed(const ImageGrid& noisy,
                                     const PriorModel& model,
                                     const DenoiseConfig& cfg) {
  cfg.validate();
  if (model.patch_size() != cfg.patch_size) {
    throw InvalidArgument("denoise_image: model patch size " +
                          std::to_string(model.patch_size()) +
                          " != configured " + std::to_string(cfg.patch_size));
  }
  const auto patches = extract_noisy_patches(noisy, cfg.patch_size, cfg.stride);
  const PatchDenoiser denoiser(model, cfg);

  DenoiseResult result;
  result.patches.resize(patches.size());
  parallel_for(patches.size(), cfg.workers, [&](std::size_t i) {
    const SamplerState state{cfg.seed, static_cast<std::uint64_t>(i)};
    result.patches[i] = denoiser.denoise(patches[i], state);
  });

  // Raster-order accumulation keeps the sums independent of thread timing.
  result.image = aggregate_patches(result.patches, noisy.width(), noisy.height());
  double ess_total = 0.0;
  for (const auto& p : result.patches) {
    ess_total += p.ess;
    if (p.fallback) ++result.fallback_count;
  }
  result.mean_ess = patches.empty() ? 0.0 : ess_total / static_cast<double>(patches.size());
  return result;
}

ImageGrid denoise_image(const ImageGrid& noisy, const PriorModel& model,
                        const DenoiseConfig& cfg) {
  return denoise_image_detailed(noisy, model, cfg).image;
}

ImageGrid to_display_range(const ImageGrid& img, double peak) {
  if (!(peak > 0.0)) throw InvalidArgument("to_display_range: peak must be > 0");
  return scaled(img, 255.0 / peak);
}

}  // namespace psnis
