#include <png.h>

#include <cmath>
#include <algorithm>
#include <vector>

#include "frsb/errors.hpp"
#include "frsb/imaging.hpp"

namespace frsb {

Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw IoError("cannot read PNG '" + path.string() + "': " + png.message);
  png.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&png);
    throw IoError("cannot decode PNG '" + path.string() + "': " + png.message);
  }
  const int h = static_cast<int>(png.height);
  const int w = static_cast<int>(png.width);
  Image img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img(c, y, x) = buffer[(std::size_t(y) * w + x) * 3 + c] / 255.0f;
  return img;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  if (image.empty()) throw ShapeError("cannot write an empty image");
  const int h = image.height();
  const int w = image.width();
  std::vector<png_byte> buffer(std::size_t(h) * w * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const long v = std::lround(double(image(c, y, x)) * 255.0);
        buffer[(std::size_t(y) * w + x) * 3 + c] = static_cast<png_byte>(std::clamp(v, 0L, 255L));
      }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(w);
  png.height = static_cast<png_uint_32>(h);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr))
    throw IoError("cannot write PNG '" + path.string() + "': " + png.message);
}

}  // namespace frsb
