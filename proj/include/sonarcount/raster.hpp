#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sonarcount {

/// Row-major image with 1 or 3 interleaved channels. Values live in [0,1].
class Raster {
 public:
  Raster() = default;

  Raster(int width, int height, int channels, float fill = 0.0f)
      : width_(width), height_(height), channels_(channels) {
    if (width <= 0 || height <= 0) {
      throw std::invalid_argument("Raster: dimensions must be positive");
    }
    if (channels != 1 && channels != 3) {
      throw std::invalid_argument("Raster: channels must be 1 or 3");
    }
    pixels_.assign(static_cast<std::size_t>(width) * height * channels,
                   std::clamp(fill, 0.0f, 1.0f));
  }

  Raster(int width, int height, int channels, std::vector<float> pixels)
      : Raster(width, height, channels) {
    if (pixels.size() != pixels_.size()) {
      throw std::invalid_argument("Raster: pixel buffer has wrong length");
    }
    pixels_ = std::move(pixels);
    clamp_all();
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  const std::vector<float>& pixels() const { return pixels_; }
  std::vector<float>& pixels() { return pixels_; }

  float at(int x, int y, int c = 0) const { return pixels_[index(x, y, c)]; }
  float& at(int x, int y, int c = 0) { return pixels_[index(x, y, c)]; }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  bool same_shape(const Raster& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  void clamp_all() {
    for (auto& v : pixels_) v = std::clamp(v, 0.0f, 1.0f);
  }

  friend bool operator==(const Raster& a, const Raster& b) {
    return a.same_shape(b) && a.pixels_ == b.pixels_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> pixels_;
};

/// Bilinear resample onto a (w, h) grid using pixel-centre alignment.
inline Raster resize(const Raster& r, int w, int h) {
  if (w <= 0 || h <= 0) {
    throw std::invalid_argument("resize: target dimensions must be positive");
  }
  if (w == r.width() && h == r.height()) return r;
  Raster out(w, h, r.channels());
  const double sx = static_cast<double>(r.width()) / w;
  const double sy = static_cast<double>(r.height()) / h;
  for (int y = 0; y < h; ++y) {
    double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, r.height() - 1.0);
    int y0 = static_cast<int>(std::floor(fy));
    int y1 = std::min(y0 + 1, r.height() - 1);
    double wy = fy - y0;
    for (int x = 0; x < w; ++x) {
      double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, r.width() - 1.0);
      int x0 = static_cast<int>(std::floor(fx));
      int x1 = std::min(x0 + 1, r.width() - 1);
      double wx = fx - x0;
      for (int c = 0; c < r.channels(); ++c) {
        double top = (1 - wx) * r.at(x0, y0, c) + wx * r.at(x1, y0, c);
        double bot = (1 - wx) * r.at(x0, y1, c) + wx * r.at(x1, y1, c);
        out.at(x, y, c) =
            std::clamp(static_cast<float>((1 - wy) * top + wy * bot), 0.0f, 1.0f);
      }
    }
  }
  return out;
}

/// Single-channel sonar images are replicated into three channels; 3-channel
/// rasters pass through unchanged.
inline Raster to_three_channels(const Raster& r) {
  if (r.channels() == 3) return r;
  Raster out(r.width(), r.height(), 3);
  auto& dst = out.pixels();
  const auto& src = r.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
  }
  return out;
}

/// Full preprocessing for the model input: 3 channels at size x size.
inline Raster preprocess(const Raster& r, int size) {
  return to_three_channels(resize(r, size, size));
}

}  // namespace sonarcount
