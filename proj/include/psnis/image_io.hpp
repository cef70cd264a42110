#pragma once

#include <filesystem>

#include "psnis/image_grid.hpp"

namespace psnis {

/// Reads a grayscale image. The format is detected from the content:
/// PNG (8- or 16-bit; color is converted to gray), PGM (P2 or P5, any
/// maxval), or a plain-text grid ("width height" followed by height rows of
/// width numbers). Pixel values are taken as-is (no normalization).
/// Throws DataError on unreadable or malformed input.
ImageGrid read_image(const std::filesystem::path& path);

/// round-half-up then clamp to [0, 255].
ImageGrid quantize_8bit(const ImageGrid& img);

/// Writes quantize_8bit(img) as 8-bit data. Format by extension: .png,
/// .pgm (P5) or .txt.
void write_image_8bit(const std::filesystem::path& path, const ImageGrid& img);

/// Writes an integer count image losslessly: .png as 16-bit gray, .pgm as P5
/// with maxval 65535, .txt as an integer grid (no upper bound). Throws
/// InvalidArgument for non-integer pixels or counts above 65535 in the
/// binary formats.
void write_counts(const std::filesystem::path& path, const ImageGrid& counts);

}  // namespace psnis
