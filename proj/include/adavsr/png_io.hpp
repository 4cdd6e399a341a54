#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace adavsr {

/// 8-bit image with interleaved channels (1 = gray, 3 = RGB).
struct Image8 {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;
};

/// Decodes any PNG into 8-bit gray or RGB; alpha is dropped, palettes and
/// 16-bit samples are converted.
Image8 read_png(const std::filesystem::path& path);
void write_png(const Image8& image, const std::filesystem::path& path);

}  // namespace adavsr
