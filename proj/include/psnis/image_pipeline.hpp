#pragma once

#include <span>
#include <vector>

#include "psnis/config.hpp"
#include "psnis/denoiser.hpp"
#include "psnis/image_grid.hpp"
#include "psnis/patch_model.hpp"
#include "psnis/poisson.hpp"

namespace psnis {

/// img * (peak / max pixel). Throws InvalidArgument for an all-zero image or
/// a non-positive peak.
ImageGrid scale_to_peak(const ImageGrid& img, double peak);

/// Top-left offsets along one axis: 0, stride, 2*stride, ... with the last
/// offset clamped to dim - patch_size so the far edge is always covered.
std::vector<int> patch_offsets(int dim, int patch_size, int stride);

/// Patches at every (row, col) in patch_offsets(height) x patch_offsets(width),
/// in raster order.
std::vector<Patch> extract_patches(const ImageGrid& img, int patch_size,
                                   int stride);

/// As extract_patches, for count images. Throws InvalidArgument if a pixel is
/// not a nonnegative integer.
std::vector<NoisyPatch> extract_noisy_patches(const ImageGrid& counts,
                                              int patch_size, int stride);

/// Running per-pixel sum and cover count for overlap averaging.
class AccumulatorGrid {
 public:
  AccumulatorGrid(int width, int height);

  /// Adds a patch_size x patch_size block whose top-left pixel is (row, col).
  void add(const Vector& values, int row, int col);
  /// Adds another accumulator's sums and counts.
  void merge(const AccumulatorGrid& other);
  /// sum / count per pixel; throws ConsistencyError for an uncovered pixel.
  ImageGrid resolve() const;

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<double>& counts() const { return count_; }

 private:
  int width_;
  int height_;
  std::vector<double> sum_;
  std::vector<double> count_;
};

/// Overlap-averaged reassembly of patch estimates into a width x height
/// image, accumulated in the given order.
ImageGrid aggregate_patches(std::span<const PatchEstimate> estimates,
                            int width, int height);

/// 10 log10(data_max^2 / MSE). Returns +inf when the images are identical.
double psnr(const ImageGrid& estimate, const ImageGrid& reference,
            double data_max);

struct DenoiseResult {
  ImageGrid image;
  /// One entry per extracted patch, in raster order.
  std::vector<PatchEstimate> patches;
  double mean_ess = 0.0;
  std::size_t fallback_count = 0;
};

/// Extracts noisy patches at cfg.stride, denoises each with the sampler
/// keyed by (cfg.seed, raster index), and averages the overlaps. Output does
/// not depend on cfg.workers.
DenoiseResult denoise_image_detailed(const ImageGrid& noisy,
                                     const PriorModel& model,
                                     const DenoiseConfig& cfg);

ImageGrid denoise_image(const ImageGrid& noisy, const PriorModel& model,
                        const DenoiseConfig& cfg);

/// Scales a peak-unit image to the [0, 255] display range (factor 255/peak).
ImageGrid to_display_range(const ImageGrid& img, double peak);

}  // namespace psnis
