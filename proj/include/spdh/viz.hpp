#pragma once

#include <string>
#include <vector>

#include "spdh/codec.hpp"
#include "spdh/geometry.hpp"
#include "spdh/image_io.hpp"

namespace spdh {

/// Depth colormap (near = warm, far = cool, no-return = black); range taken
/// from [z_lo, z_hi] mm.
RgbImage colorize_depth(const DepthImage& depth, double z_lo, double z_hi);

/// RGB = the three normalized XYZ channels.
RgbImage colorize_xyz(const NormalizedXyz& xyz);

void draw_line(RgbImage& img, int u0, int v0, int u1, int v1, std::uint8_t r, std::uint8_t g,
               std::uint8_t b);
void draw_disc(RgbImage& img, int cu, int cv, int radius, std::uint8_t r, std::uint8_t g,
               std::uint8_t b);

/// Skeleton overlay: edges between each joint and its parent (parent < 0 =
/// none), markers centered on the rounded projections. Marker color encodes
/// visibility (green/red).
void draw_skeleton(RgbImage& img, const JointSet3D& joints, const PinholeIntrinsics& K,
                   const std::vector<int>& parents);

/// 16-bit grayscale rendering of one heatmap page, values round(v*65535).
void save_heatmap_png(const std::filesystem::path& path, const std::vector<float>& map,
                      int height, int width);

}  // namespace spdh
