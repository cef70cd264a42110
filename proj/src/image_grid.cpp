#include "psnis/image_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "psnis/errors.hpp"

namespace psnis {

ImageGrid::ImageGrid(int width, int height)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw InvalidArgument("ImageGrid: negative dimensions");
  }
  pixels_.assign(static_cast<std::size_t>(width) * height, 0.0);
}

ImageGrid::ImageGrid(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 0 || height < 0) {
    throw InvalidArgument("ImageGrid: negative dimensions");
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidArgument("ImageGrid: " + std::to_string(pixels_.size()) +
                          " pixels for a " + std::to_string(width) + "x" +
                          std::to_string(height) + " image");
  }
  for (double v : pixels_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument("ImageGrid: pixel values must be finite and >= 0");
    }
  }
}

double ImageGrid::max_value() const {
  if (pixels_.empty()) return 0.0;
  return *std::max_element(pixels_.begin(), pixels_.end());
}

ImageGrid scaled(const ImageGrid& img, double factor) {
  std::vector<double> out(img.pixels().begin(), img.pixels().end());
  for (double& v : out) v *= factor;
  return ImageGrid(img.width(), img.height(), std::move(out));
}

}  // namespace psnis
