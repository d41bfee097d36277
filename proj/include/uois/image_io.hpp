#pragma once

#include <filesystem>

#include "uois/image.hpp"

namespace uois {

// PNG codecs. Colour files are 8-bit RGB (alpha dropped), depth files 16-bit
// single channel, label files 8- or 16-bit single channel.
ColorImage read_color_png(const std::filesystem::path& path);
DepthImage read_depth_png(const std::filesystem::path& path);
LabelImage read_label_png(const std::filesystem::path& path);

void write_color_png(const std::filesystem::path& path, const ColorImage& image);
void write_depth_png(const std::filesystem::path& path, const DepthImage& image);
// Labels are written as 16-bit; ids above 65535 are rejected.
void write_label_png(const std::filesystem::path& path, const LabelImage& image);

}  // namespace uois
