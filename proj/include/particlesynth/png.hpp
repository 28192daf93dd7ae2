#pragma once

#include <png.h>

#include <cstring>
#include <string>

#include "particlesynth/error.hpp"
#include "particlesynth/io.hpp"
#include "particlesynth/raster.hpp"

namespace particlesynth {

namespace detail {

template <int Channels>
void write_png_impl(const Image<Channels>& img, const fs::path& path) {
  if (img.width() <= 0 || img.height() <= 0) {
    throw Error(Errc::kInvalidArgument, "cannot write zero-dimension image to " + path.string());
  }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = Channels == 4 ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.data().data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(Errc::kIo, "png encode failed for " + path.string() + ": " + msg);
  }
  std::string bytes(size, '\0');
  if (!png_image_write_to_memory(&image, bytes.data(), &size, 0, img.data().data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(Errc::kIo, "png encode failed for " + path.string() + ": " + msg);
  }
  bytes.resize(size);
  write_file(path, bytes);
}

template <int Channels>
Image<Channels> read_png_impl(const fs::path& path) {
  const std::string bytes = read_file(path);
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(Errc::kIo, "not a readable png: " + path.string() + ": " + image.message);
  }
  image.format = Channels == 4 ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  Image<Channels> out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.data().data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(Errc::kIo, "png decode failed for " + path.string() + ": " + msg);
  }
  return out;
}

}  // namespace detail

inline void write_png(const RgbImage& img, const fs::path& path) { detail::write_png_impl(img, path); }
inline void write_png(const RgbaImage& img, const fs::path& path) { detail::write_png_impl(img, path); }

inline RgbImage read_png_rgb(const fs::path& path) { return detail::read_png_impl<3>(path); }
/// Images without alpha come back fully opaque.
inline RgbaImage read_png_rgba(const fs::path& path) { return detail::read_png_impl<4>(path); }

}  // namespace particlesynth
