#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "psnis/patch_model.hpp"

namespace psnis {

/// Binary model layout, all numbers little-endian:
///
///   "PSNISM1"                                  7 bytes
///   patch_size, k_count, m                     int64 each
///   member count of each cluster               k_count x int64
///   training seed                              int64
///   ridge scale                                float64
///   per cluster: mean (m), covariance (m*m, row-major),
///                members (count * m, member after member)   float64
///   CRC-32 (zlib polynomial) of all bytes above   uint32
///
/// Cholesky factors are not stored; they are recomputed on load from the
/// covariance and the ridge scale, which reproduces them bit-exactly.
inline constexpr char kModelMagic[7] = {'P', 'S', 'N', 'I', 'S', 'M', '1'};

std::vector<std::uint8_t> serialize_model(const PriorModel& model);

/// Throws ModelFormatError on a bad magic, CRC mismatch, truncation or
/// inconsistent header; ModelDegenerate if a stored cluster cannot be
/// factorized.
PriorModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const PriorModel& model);
PriorModel load_model(const std::filesystem::path& path);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

}  // namespace psnis
