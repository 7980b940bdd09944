#pragma once

#include <array>
#include <optional>
#include <string>

#include "sparsefuse/geometry.hpp"

namespace sparsefuse::io {

// All readers throw FormatError on malformed headers, truncated payloads and
// trailing bytes after the payload.

// PFM: "Pf" (one channel) or "PF" (three channels), rows stored bottom to top,
// negative scale = little endian. Only single-channel files are depth.
DepthRaster read_pfm(const std::string& path);
void write_pfm(const std::string& path, const DepthRaster& raster);
void write_pfm_rgb(const std::string& path, const std::array<Raster<float>, 3>& channels);
std::array<Raster<float>, 3> read_pfm_rgb(const std::string& path);

// Binary PGM (P5), 8- or 16-bit (big endian per Netpbm when maxval > 255).
Raster<std::uint16_t> read_pgm(const std::string& path);
void write_pgm16(const std::string& path, const Raster<std::uint16_t>& raster);

// Binary PPM (P6), normalized to [0,1] by maxval.
ColorRaster read_ppm(const std::string& path);
// Writes 8-bit; components are clamped to [0,1] and rounded.
void write_ppm(const std::string& path, const ColorRaster& raster);

// Depth from PFM (meters) or PGM divided by depth_scale. Integer depth without
// a scale is rejected.
DepthRaster read_depth(const std::string& path, std::optional<double> depth_scale);

// Labels from PGM; 65535 marks unlabeled pixels.
LabelRaster read_labels(const std::string& path);

struct RasterPaths {
  std::string color;
  std::string depth;
  std::string labels;
};

View read_rasters(const RasterPaths& paths, const Intrinsics& intrinsics, std::optional<double> depth_scale);

// Binary little-endian PLY: float x y z, uchar red green blue (color x255,
// rounded), ushort label. Output bytes depend only on the cloud.
void write_cloud(const LabeledCloud& cloud, const std::string& path);
std::string encode_cloud(const LabeledCloud& cloud);

// Reads ascii or binary_little_endian PLY with a vertex element holding x, y,
// z (float or double) and optionally red/green/blue and label. Missing colors
// read as 0, missing labels as 0. Other scalar properties are skipped.
LabeledCloud read_cloud(const std::string& path);

}  // namespace sparsefuse::io
