#pragma once

#include <span>
#include <vector>

namespace psnis {

/// Row-major grayscale image of nonnegative, finite intensities.
class ImageGrid {
 public:
  ImageGrid() = default;
  /// Zero-filled image.
  ImageGrid(int width, int height);
  /// Throws InvalidArgument if the pixel count does not match or any value is
  /// negative or non-finite.
  ImageGrid(int width, int height, std::vector<double> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }

  double at(int row, int col) const {
    return pixels_[static_cast<std::size_t>(row) * width_ + col];
  }
  double& at(int row, int col) {
    return pixels_[static_cast<std::size_t>(row) * width_ + col];
  }

  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }

  double max_value() const;

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

/// Every pixel multiplied by `factor`.
ImageGrid scaled(const ImageGrid& img, double factor);

}  // namespace psnis
