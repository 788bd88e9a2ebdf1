#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lf/light_field.hpp"

namespace lf {

/// 8-bit PNG loaded as [0,1] floats. Gray/palette/alpha inputs are expanded
/// to RGB; 16-bit inputs are reduced to 8 bits.
Image read_png(const std::filesystem::path& path);

/// Writes 8-bit PNG: RGB for 3-channel images, grayscale for 1-channel.
/// Values are clamped to [0,1] and rounded; fixed encoder settings keep the
/// output byte-deterministic.
void write_png(const std::filesystem::path& path, const Image& img);

/// 16-bit grayscale PNG of raw fixed-point samples (row-major).
void write_png_gray16(const std::filesystem::path& path,
                      const std::vector<uint16_t>& values, int width,
                      int height);
std::vector<uint16_t> read_png_gray16(const std::filesystem::path& path,
                                      int* width, int* height);

/// Directory layout: manifest.json {rows, cols, width, height,
/// focal_length_px, principal_point, angular_spacing} plus one
/// view_{s:02}_{t:02}.png per view. `rows` is the vertical extent (T),
/// `cols` the horizontal extent (S).
LightField load_light_field(const std::filesystem::path& dir);
void save_light_field(const LightField& lf, const std::filesystem::path& dir);

std::string view_file_name(int s, int t);

}  // namespace lf
