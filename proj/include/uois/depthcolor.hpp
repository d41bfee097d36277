#pragma once

#include <array>
#include <cstddef>

#include "uois/image.hpp"

namespace uois {

// 256-entry 8-bit viridis table (matplotlib's listed colormap, rounded).
const std::array<Rgb, 256>& viridis_lut();

// Maps a normalized depth in [0,1] to a LUT index: floor(v * 255 + 0.5).
std::size_t lut_index(double normalized);

// Colorizes a depth frame for the proposal generator.
//
// Valid (nonzero) pixels are min-max normalized over the valid set and looked
// up in the viridis table; invalid pixels take entry 0. When every valid pixel
// has the same depth they all map to entry 0. Throws InvalidInput("no valid
// depth") for an all-zero frame.
ColorImage colorize_depth(const DepthImage& depth);

}  // namespace uois
