#pragma once

#include <filesystem>

#include "stereostyle/tensor.hpp"

namespace stereostyle {

/// Reads an 8-bit grayscale or RGB PNG; values are scaled to [0,1].
/// Palette images are expanded to RGB.
/// Throws IoError if the file cannot be read and FormatError for any
/// bit depth other than 8 or for images carrying an alpha channel.
Tensor3 load_image(const std::filesystem::path& path);

/// Writes a 1- or 3-channel tensor as an 8-bit PNG after clamping to [0,1]
/// and rounding to the nearest level.
void save_image(const Tensor3& image, const std::filesystem::path& path);

/// Reads a single-channel PFM ("Pf"). Either endianness is accepted and rows
/// are returned top-down. Non-finite samples are rejected with FormatError.
DisparityMap load_float_map(const std::filesystem::path& path);

/// Reads a PFM holding {0,1} values as an occlusion mask.
OcclusionMask load_mask(const std::filesystem::path& path);

/// Writes a little-endian single-channel PFM (scale -1, rows bottom-up).
void save_float_map(const DisparityMap& map, const std::filesystem::path& path);
void save_float_map(const OcclusionMask& mask, const std::filesystem::path& path);
void save_float_map(const HoleMask& mask, const std::filesystem::path& path);

}  // namespace stereostyle
