#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "sonarcount/raster.hpp"
#include "sonarcount/seed_stream.hpp"

namespace sonarcount {

// ---------------------------------------------------------------------------
// Kernels. Every kernel takes its input by const reference and returns a new
// raster whose values are clamped to [0,1].
// ---------------------------------------------------------------------------

namespace detail {

// Reflect-101 border handling ("dcb|abcd|cba"), folded for any offset.
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace detail

/// Normalized 1D Gaussian taps for radius ceil(3 sigma). sigma must be > 0.
inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

inline Raster gaussian_blur(const Raster& r, double sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("gaussian_blur: sigma must be >= 0");
  if (sigma == 0.0) return r;
  const auto k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int w = r.width(), h = r.height(), ch = r.channels();

  std::vector<double> tmp(r.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          acc += k[t + radius] * r.at(detail::reflect_index(x + t, w), y, c);
        }
        tmp[r.index(x, y, c)] = acc;
      }
    }
  }
  Raster out(w, h, ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          acc += k[t + radius] * tmp[r.index(x, detail::reflect_index(y + t, h), c)];
        }
        out.at(x, y, c) = std::clamp(static_cast<float>(acc), 0.0f, 1.0f);
      }
    }
  }
  return out;
}

enum class MirrorAxis { horizontal, vertical };

inline Raster mirror(const Raster& r, MirrorAxis axis) {
  Raster out(r.width(), r.height(), r.channels());
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      const int sx = axis == MirrorAxis::horizontal ? r.width() - 1 - x : x;
      const int sy = axis == MirrorAxis::vertical ? r.height() - 1 - y : y;
      for (int c = 0; c < r.channels(); ++c) out.at(x, y, c) = r.at(sx, sy, c);
    }
  }
  return out;
}

/// Forward map: p' = center + scale * R(rotation) * (p - center) + translate.
/// Pixel centres sit on integer coordinates.
struct AffineParams {
  double rotation_deg = 0.0;
  double scale = 1.0;
  double translate_x = 0.0;
  double translate_y = 0.0;
  double center_x = 0.0;
  double center_y = 0.0;

  static AffineParams about_center(const Raster& r, double rotation_deg, double scale = 1.0,
                                   double tx = 0.0, double ty = 0.0) {
    return {rotation_deg, scale, tx, ty, (r.width() - 1) / 2.0, (r.height() - 1) / 2.0};
  }

  AffineParams inverse() const {
    const double th = -rotation_deg * std::numbers::pi / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    return {-rotation_deg, 1.0 / scale, -(c * translate_x - s * translate_y) / scale,
            -(s * translate_x + c * translate_y) / scale, center_x, center_y};
  }
};

namespace detail {

// Bilinear tap with out-of-range neighbours contributing `fill`.
inline double sample_bilinear(const Raster& r, double fx, double fy, int c, double fill) {
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const double wx = fx - x0, wy = fy - y0;
  auto px = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= r.width() || y >= r.height()) return fill;
    return r.at(x, y, c);
  };
  return (1 - wy) * ((1 - wx) * px(x0, y0) + wx * px(x0 + 1, y0)) +
         wy * ((1 - wx) * px(x0, y0 + 1) + wx * px(x0 + 1, y0 + 1));
}

// Snaps values within 1e-9 of an integer, so exact quarter turns and full
// turns land on source pixels despite trig rounding.
inline double snap(double v) {
  const double n = std::round(v);
  return std::abs(v - n) < 1e-9 ? n : v;
}

}  // namespace detail

inline Raster affine(const Raster& r, const AffineParams& p) {
  if (!(p.scale > 0.0)) throw std::invalid_argument("affine: scale must be > 0");
  const double th = p.rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(th), s = std::sin(th);
  Raster out(r.width(), r.height(), r.channels());
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      // Inverse map: p = center + R(-th) * (p' - center - t) / scale.
      const double dx = (x - p.center_x - p.translate_x) / p.scale;
      const double dy = (y - p.center_y - p.translate_y) / p.scale;
      const double sx = detail::snap(p.center_x + c * dx + s * dy);
      const double sy = detail::snap(p.center_y - s * dx + c * dy);
      for (int ch = 0; ch < r.channels(); ++ch) {
        out.at(x, y, ch) = std::clamp(
            static_cast<float>(detail::sample_bilinear(r, sx, sy, ch, 0.0)), 0.0f, 1.0f);
      }
    }
  }
  return out;
}

inline Raster adjust_brightness(const Raster& r, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("adjust_brightness: factor must be > 0");
  Raster out = r;
  for (auto& v : out.pixels()) v = std::clamp(static_cast<float>(v * factor), 0.0f, 1.0f);
  return out;
}

inline Raster color_shift(const Raster& r, const std::array<double, 3>& deltas) {
  if (r.channels() != 3) throw std::invalid_argument("color_shift: raster must have 3 channels");
  Raster out = r;
  auto& px = out.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = std::clamp(static_cast<float>(px[i] + deltas[i % 3]), 0.0f, 1.0f);
  }
  return out;
}

inline Raster to_grayscale(const Raster& r) {
  if (r.channels() != 3) throw std::invalid_argument("to_grayscale: raster must have 3 channels");
  Raster out = r;
  auto& px = out.pixels();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    // Weights sum to one, so R=G=B pixels are returned bit-exact.
    float g = px[i] == px[i + 1] && px[i] == px[i + 2]
                  ? px[i]
                  : static_cast<float>(0.299 * px[i] + 0.587 * px[i + 1] + 0.114 * px[i + 2]);
    g = std::clamp(g, 0.0f, 1.0f);
    px[i] = px[i + 1] = px[i + 2] = g;
  }
  return out;
}

/// Zeroes whole grid-aligned block x block squares, visited in stream order,
/// until at least `rate` of the pixels are covered.
inline Raster coarse_dropout(const Raster& r, SeedStream stream, double rate, int block) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("coarse_dropout: rate must be in [0,1]");
  if (block < 1) throw std::invalid_argument("coarse_dropout: block must be >= 1");
  if (rate == 0.0) return r;

  const int bw = (r.width() + block - 1) / block;
  const int bh = (r.height() + block - 1) / block;
  std::vector<int> order(static_cast<std::size_t>(bw) * bh);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  shuffle(order, stream);

  const double target = rate * r.width() * r.height();
  Raster out = r;
  double covered = 0.0;
  for (int b : order) {
    if (covered >= target) break;
    const int x0 = (b % bw) * block, y0 = (b / bw) * block;
    const int x1 = std::min(x0 + block, r.width()), y1 = std::min(y0 + block, r.height());
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        for (int c = 0; c < r.channels(); ++c) out.at(x, y, c) = 0.0f;
      }
    }
    covered += static_cast<double>(x1 - x0) * (y1 - y0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool valid() const { return lo <= hi; }
  double draw(SeedStream& s) const { return s.uniform(lo, hi); }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct BackgroundPolicy {
  double hflip_p = 0.5;
  double vflip_p = 0.25;
  Interval rotation_deg{-15.0, 15.0};
  Interval scale{0.9, 1.1};
  Interval translate_frac{-0.05, 0.05};
  Interval blur_sigma{0.0, 1.5};
  friend bool operator==(const BackgroundPolicy&, const BackgroundPolicy&) = default;
};

struct GlobalPolicy {
  Interval color_delta{-0.1, 0.1};
  Interval brightness{0.8, 1.2};
  double grayscale_p = 0.2;
  Interval blur_sigma{0.0, 1.0};
  Interval dropout_rate{0.0, 0.03};
  int dropout_block_min = 4;
  int dropout_block_max = 8;
  friend bool operator==(const GlobalPolicy&, const GlobalPolicy&) = default;
};

struct PolicyConfig {
  BackgroundPolicy background;
  GlobalPolicy global;

  /// Every augmentation disabled; both policies become exact identities.
  static PolicyConfig identity() {
    PolicyConfig c;
    c.background = {0.0, 0.0, {0, 0}, {1, 1}, {0, 0}, {0, 0}};
    c.global = {{0, 0}, {1, 1}, 0.0, {0, 0}, {0, 0}, 4, 4};
    return c;
  }

  /// Empty string when valid, else a description of the first violation.
  std::string validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    const auto& b = background;
    const auto& g = global;
    if (!prob(b.hflip_p) || !prob(b.vflip_p)) return "background mirror probabilities must be in [0,1]";
    if (!b.rotation_deg.valid() || !b.scale.valid() || !b.translate_frac.valid() || !b.blur_sigma.valid())
      return "background intervals must satisfy low <= high";
    if (b.scale.lo <= 0.0) return "background scale must be > 0";
    if (b.blur_sigma.lo < 0.0) return "background blur sigma must be >= 0";
    if (!prob(g.grayscale_p)) return "global grayscale probability must be in [0,1]";
    if (!g.color_delta.valid() || !g.brightness.valid() || !g.blur_sigma.valid() || !g.dropout_rate.valid())
      return "global intervals must satisfy low <= high";
    if (g.brightness.lo <= 0.0) return "global brightness factor must be > 0";
    if (g.blur_sigma.lo < 0.0) return "global blur sigma must be >= 0";
    if (g.dropout_rate.lo < 0.0 || g.dropout_rate.hi > 1.0) return "global dropout rate must lie in [0,1]";
    if (g.dropout_block_min < 1 || g.dropout_block_min > g.dropout_block_max)
      return "global dropout block range must satisfy 1 <= min <= max";
    return {};
  }
};

/// Parameters drawn for one application of the background policy.
struct BackgroundDraw {
  bool hflip = false;
  bool vflip = false;
  double rotation_deg = 0.0;
  double scale = 1.0;
  double translate_x = 0.0;
  double translate_y = 0.0;
  double blur_sigma = 0.0;
};

/// Always consumes the same number of draws, whatever gets applied.
inline BackgroundDraw draw_background(SeedStream& s, const BackgroundPolicy& cfg, int width, int height) {
  BackgroundDraw d;
  d.hflip = s.bernoulli(cfg.hflip_p);
  d.vflip = s.bernoulli(cfg.vflip_p);
  d.rotation_deg = cfg.rotation_deg.draw(s);
  d.scale = cfg.scale.draw(s);
  d.translate_x = cfg.translate_frac.draw(s) * width;
  d.translate_y = cfg.translate_frac.draw(s) * height;
  d.blur_sigma = cfg.blur_sigma.draw(s);
  return d;
}

inline Raster apply_background_draw(const Raster& r, const BackgroundDraw& d) {
  Raster out = r;
  if (d.hflip) out = mirror(out, MirrorAxis::horizontal);
  if (d.vflip) out = mirror(out, MirrorAxis::vertical);
  if (d.rotation_deg != 0.0 || d.scale != 1.0 || d.translate_x != 0.0 || d.translate_y != 0.0) {
    out = affine(out, AffineParams::about_center(out, d.rotation_deg, d.scale, d.translate_x, d.translate_y));
  }
  return gaussian_blur(out, d.blur_sigma);
}

/// mirror -> affine -> blur, parameters drawn from `stream`.
inline Raster apply_background_policy(const Raster& r, SeedStream stream, const PolicyConfig& cfg) {
  return apply_background_draw(r, draw_background(stream, cfg.background, r.width(), r.height()));
}

struct GlobalDraw {
  std::array<double, 3> color_delta{0.0, 0.0, 0.0};
  double brightness = 1.0;
  bool grayscale = false;
  double blur_sigma = 0.0;
  double dropout_rate = 0.0;
  int dropout_block = 1;
  SeedStream dropout_stream;
};

inline GlobalDraw draw_global(SeedStream& s, const GlobalPolicy& cfg) {
  GlobalDraw d;
  for (auto& c : d.color_delta) c = cfg.color_delta.draw(s);
  d.brightness = cfg.brightness.draw(s);
  d.grayscale = s.bernoulli(cfg.grayscale_p);
  d.blur_sigma = cfg.blur_sigma.draw(s);
  d.dropout_rate = cfg.dropout_rate.draw(s);
  d.dropout_block = static_cast<int>(s.uniform_int(cfg.dropout_block_min, cfg.dropout_block_max + 1));
  d.dropout_stream = s.child(0);
  return d;
}

inline Raster apply_global_draw(const Raster& r, const GlobalDraw& d) {
  if (r.channels() != 3) throw std::invalid_argument("global policy: raster must have 3 channels");
  Raster out = r;
  if (d.color_delta != std::array<double, 3>{0.0, 0.0, 0.0}) out = color_shift(out, d.color_delta);
  if (d.brightness != 1.0) out = adjust_brightness(out, d.brightness);
  if (d.grayscale) out = to_grayscale(out);
  out = gaussian_blur(out, d.blur_sigma);
  return coarse_dropout(out, d.dropout_stream, d.dropout_rate, d.dropout_block);
}

/// color shift -> brightness -> optional grayscale -> blur -> coarse dropout.
inline Raster apply_global_policy(const Raster& r, SeedStream stream, const PolicyConfig& cfg) {
  if (r.channels() != 3) throw std::invalid_argument("global policy: raster must have 3 channels");
  return apply_global_draw(r, draw_global(stream, cfg.global));
}

}  // namespace sonarcount
