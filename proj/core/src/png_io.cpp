#include "semcont/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace semcont {

PngImage read_png(const std::string& path) {
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&im, path.c_str()))
    throw std::runtime_error("png: cannot read " + path + ": " + im.message);
  PngImage out;
  out.width = static_cast<int>(im.width);
  out.height = static_cast<int>(im.height);
  const bool gray = (im.format & PNG_FORMAT_FLAG_COLOR) == 0;
  out.channels = gray ? 1 : 3;
  im.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  out.pixels.resize(static_cast<size_t>(out.width) * out.height * out.channels);
  if (!png_image_finish_read(&im, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&im);
    throw std::runtime_error("png: decode failed for " + path + ": " + im.message);
  }
  return out;
}

void write_png(const std::string& path, const PngImage& img) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("png: channels must be 1 or 3");
  if (img.pixels.size() != static_cast<size_t>(img.width) * img.height * img.channels)
    throw std::invalid_argument("png: pixel buffer size mismatch");
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  im.width = static_cast<png_uint_32>(img.width);
  im.height = static_cast<png_uint_32>(img.height);
  im.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&im, path.c_str(), 0, img.pixels.data(), 0, nullptr))
    throw std::runtime_error("png: cannot write " + path + ": " + im.message);
}

PngImage to_png_image(const ImageBatch& x, int64_t index) {
  require_images(x, "to_png_image");
  if (index < 0 || index >= x.dim(0)) throw std::out_of_range("to_png_image: bad index");
  const int64_t c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (c != 1 && c != 3) throw std::invalid_argument("to_png_image: channels must be 1 or 3");
  PngImage out;
  out.width = static_cast<int>(w);
  out.height = static_cast<int>(h);
  out.channels = static_cast<int>(c);
  out.pixels.resize(static_cast<size_t>(c * h * w));
  for (int64_t y = 0; y < h; ++y)
    for (int64_t xx = 0; xx < w; ++xx)
      for (int64_t ch = 0; ch < c; ++ch)
        out.pixels[static_cast<size_t>((y * w + xx) * c + ch)] = static_cast<uint8_t>(
            std::lround(std::clamp(x.at4(index, ch, y, xx), 0.0f, 1.0f) * 255.0f));
  return out;
}

ImageBatch from_png_image(const PngImage& img) {
  ImageBatch x({1, img.channels, img.height, img.width});
  for (int y = 0; y < img.height; ++y)
    for (int xx = 0; xx < img.width; ++xx)
      for (int c = 0; c < img.channels; ++c)
        x.at4(0, c, y, xx) =
            static_cast<float>(img.pixels[static_cast<size_t>((y * img.width + xx) * img.channels + c)]) /
            255.0f;
  return x;
}

}  // namespace semcont
