#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semcont/tensor.hpp"

namespace semcont {

/// 8-bit image, row-major HWC. channels is 1 (gray) or 3 (RGB).
struct PngImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<uint8_t> pixels;
};

PngImage read_png(const std::string& path);
void write_png(const std::string& path, const PngImage& img);

/// Batch item index -> 8-bit HWC image.
PngImage to_png_image(const ImageBatch& x, int64_t index);

/// PNG -> 1×C×H×W float batch in [0,1].
ImageBatch from_png_image(const PngImage& img);

}  // namespace semcont
