#pragma once

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "sonarcount/raster.hpp"

namespace sonarcount {

class RasterIoError : public std::runtime_error {
 public:
  enum class Kind { missing_file, unsupported_format, corrupt_data, io_failure };

  RasterIoError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

/// Encodes to an in-memory PNG (8-bit gray or RGB). Output bytes depend only
/// on the pixel values.
inline std::vector<std::uint8_t> encode_png(const Raster& r) {
  if (r.empty()) throw RasterIoError(RasterIoError::Kind::io_failure, "encode_png: empty raster");
  std::vector<std::uint8_t> bytes(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) bytes[i] = quantize(r.pixels()[i]);

  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(r.width());
  image.height = static_cast<png_uint_32>(r.height());
  image.format = r.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, bytes.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw RasterIoError(RasterIoError::Kind::io_failure, "encode_png: " + msg);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, bytes.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw RasterIoError(RasterIoError::Kind::io_failure, "encode_png: " + msg);
  }
  out.resize(size);
  return out;
}

inline Raster decode_png(const std::vector<std::uint8_t>& data, const std::string& name = "<memory>") {
  if (data.size() < 8 || png_sig_cmp(data.data(), 0, 8) != 0) {
    throw RasterIoError(RasterIoError::Kind::unsupported_format, "not a PNG file: " + name);
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, data.data(), data.size())) {
    std::string msg = image.message;
    png_image_free(&image);
    throw RasterIoError(RasterIoError::Kind::corrupt_data, name + ": " + msg);
  }
  const auto fmt = image.format;
  if (fmt & (PNG_FORMAT_FLAG_ALPHA | PNG_FORMAT_FLAG_LINEAR | PNG_FORMAT_FLAG_COLORMAP)) {
    png_image_free(&image);
    throw RasterIoError(RasterIoError::Kind::unsupported_format,
                        name + ": only 8-bit grayscale or RGB PNG is supported");
  }
  const int channels = (fmt & PNG_FORMAT_FLAG_COLOR) ? 3 : 1;
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw RasterIoError(RasterIoError::Kind::corrupt_data, name + ": " + msg);
  }
  std::vector<float> px(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) px[i] = buf[i] / 255.0f;
  return Raster(static_cast<int>(image.width), static_cast<int>(image.height), channels,
                std::move(px));
}

inline Raster load_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw RasterIoError(RasterIoError::Kind::missing_file, "cannot open " + path.string());
  }
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  return decode_png(data, path.string());
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RasterIoError(RasterIoError::Kind::io_failure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw RasterIoError(RasterIoError::Kind::io_failure, "write failed: " + path.string());
}

inline void save_raster(const Raster& r, const std::filesystem::path& path) {
  write_bytes(path, encode_png(r));
}

}  // namespace sonarcount
