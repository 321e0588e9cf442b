#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sonarcount/augment.hpp"
#include "sonarcount/raster.hpp"
#include "sonarcount/seed_stream.hpp"

namespace sonarcount {

enum class Species { fish, dolphin };

inline const char* to_string(Species s) { return s == Species::fish ? "fish" : "dolphin"; }

inline Species species_from_string(const std::string& s) {
  if (s == "fish") return Species::fish;
  if (s == "dolphin") return Species::dolphin;
  throw std::invalid_argument("unknown species '" + s + "'");
}

/// A cropped object: single-channel patch plus an alpha mask of equal size.
struct Sprite {
  Species species = Species::fish;
  Raster patch;
  Raster alpha;
  std::string source_id;

  void validate() const {
    if (!patch.same_shape(alpha) || alpha.channels() != 1) {
      throw std::invalid_argument("sprite: patch and alpha must share dimensions");
    }
    if (std::none_of(alpha.pixels().begin(), alpha.pixels().end(), [](float v) { return v > 0.0f; })) {
      throw std::invalid_argument("sprite: alpha must have at least one non-zero value");
    }
  }
};

struct SpriteBank {
  std::vector<Sprite> fish;
  std::vector<Sprite> dolphins;
  std::vector<Raster> backgrounds;

  const std::vector<Sprite>& of(Species s) const { return s == Species::fish ? fish : dolphins; }
};

struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

struct Annotation {
  Species species = Species::fish;
  BoundingBox box;
  std::optional<Raster> mask;  // box-sized, single channel
};

struct Extraction {
  std::vector<Sprite> sprites;
  Raster background;
};

namespace detail {

inline float median(std::vector<float> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5f * (v[n / 2 - 1] + v[n / 2]);
}

// Nearest non-hole pixel on each side of (x, y) along the row, or along the
// column when the hole spans the whole row.
inline std::vector<float> boundary_neighbours(const Raster& img, const std::vector<std::uint8_t>& hole,
                                              int x, int y, int c) {
  std::vector<float> found;
  auto is_hole = [&](int xx, int yy) { return hole[static_cast<std::size_t>(yy) * img.width() + xx] != 0; };
  for (int xx = x - 1; xx >= 0; --xx) {
    if (!is_hole(xx, y)) { found.push_back(img.at(xx, y, c)); break; }
  }
  for (int xx = x + 1; xx < img.width(); ++xx) {
    if (!is_hole(xx, y)) { found.push_back(img.at(xx, y, c)); break; }
  }
  if (!found.empty()) return found;
  for (int yy = y - 1; yy >= 0; --yy) {
    if (!is_hole(x, yy)) { found.push_back(img.at(x, yy, c)); break; }
  }
  for (int yy = y + 1; yy < img.height(); ++yy) {
    if (!is_hole(x, yy)) { found.push_back(img.at(x, yy, c)); break; }
  }
  return found;
}

}  // namespace detail

/// Crops every annotated object into a sprite and returns the image with the
/// objects removed. Hole pixels take the median of their nearest non-hole row
/// neighbours; the filled region is then smoothed with a sigma=1 blur.
inline Extraction extract_sprites(const Raster& image, const std::vector<Annotation>& annotations,
                                  const std::string& source_id = {}) {
  Extraction ex;
  ex.background = image;
  if (annotations.empty()) return ex;

  std::vector<std::uint8_t> hole(static_cast<std::size_t>(image.width()) * image.height(), 0);
  for (const auto& a : annotations) {
    const auto& b = a.box;
    if (b.w <= 0 || b.h <= 0) throw std::invalid_argument("extract_sprites: empty box in " + source_id);
    if (b.x < 0 || b.y < 0 || b.x + b.w > image.width() || b.y + b.h > image.height()) {
      throw std::invalid_argument("extract_sprites: box outside image " + source_id);
    }
    Sprite s;
    s.species = a.species;
    s.source_id = source_id;
    s.patch = Raster(b.w, b.h, 1);
    for (int y = 0; y < b.h; ++y) {
      for (int x = 0; x < b.w; ++x) {
        float v = 0.0f;
        for (int c = 0; c < image.channels(); ++c) v += image.at(b.x + x, b.y + y, c);
        s.patch.at(x, y) = v / image.channels();
      }
    }
    if (a.mask) {
      if (a.mask->width() != b.w || a.mask->height() != b.h || a.mask->channels() != 1) {
        throw std::invalid_argument("extract_sprites: mask does not match box in " + source_id);
      }
      s.alpha = *a.mask;
    } else {
      s.alpha = Raster(b.w, b.h, 1, 1.0f);
    }
    s.validate();
    ex.sprites.push_back(std::move(s));
    for (int y = b.y; y < b.y + b.h; ++y) {
      for (int x = b.x; x < b.x + b.w; ++x) hole[static_cast<std::size_t>(y) * image.width() + x] = 1;
    }
  }

  Raster filled = image;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (!hole[static_cast<std::size_t>(y) * image.width() + x]) continue;
      for (int c = 0; c < image.channels(); ++c) {
        auto n = detail::boundary_neighbours(image, hole, x, y, c);
        filled.at(x, y, c) = n.empty() ? 0.0f : detail::median(std::move(n));
      }
    }
  }
  const Raster smooth = gaussian_blur(filled, 1.0);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (!hole[static_cast<std::size_t>(y) * image.width() + x]) continue;
      for (int c = 0; c < image.channels(); ++c) filled.at(x, y, c) = smooth.at(x, y, c);
    }
  }
  ex.background = std::move(filled);
  return ex;
}

// ---------------------------------------------------------------------------
// Scene composition
// ---------------------------------------------------------------------------

struct SceneConfig {
  int canvas_width = 224;
  int canvas_height = 224;
  int max_fish = 34;
  int max_dolphin = 3;
  Interval sprite_scale{0.7, 1.3};
  Interval sprite_rotation_deg{0.0, 360.0};
  int placement_attempts = 100;
  PolicyConfig policy;

  std::string validate() const {
    if (canvas_width <= 0 || canvas_height <= 0) return "canvas size must be positive";
    if (max_fish < 0 || max_dolphin < 0) return "count maxima must be >= 0";
    if (!sprite_scale.valid() || sprite_scale.lo <= 0.0) return "sprite scale interval must be positive";
    if (!sprite_rotation_deg.valid()) return "sprite rotation interval must satisfy low <= high";
    if (placement_attempts < 1) return "placement attempts must be >= 1";
    return policy.validate();
  }
};

struct Placement {
  Species species = Species::fish;
  int sprite_index = 0;
  int x = 0;
  int y = 0;
  double scale = 1.0;
  double rotation_deg = 0.0;
  friend bool operator==(const Placement&, const Placement&) = default;
};

struct SceneRecord {
  std::int64_t id = 0;
  std::vector<std::uint64_t> seed_path;
  int background_index = 0;
  std::vector<Placement> placements;
  int fish_count = 0;
  int dolphin_count = 0;
  std::string file;
  friend bool operator==(const SceneRecord&, const SceneRecord&) = default;
};

class PlacementError : public std::runtime_error {
 public:
  explicit PlacementError(const std::string& what) : std::runtime_error(what) {}
};

struct TransformedSprite {
  Raster premultiplied;  // patch * alpha
  Raster alpha;
};

/// Size of the axis-aligned box enclosing a w x h sprite after scaling and
/// rotation.
inline std::pair<int, int> transformed_extent(int w, int h, double scale, double rotation_deg) {
  const double th = rotation_deg * std::numbers::pi / 180.0;
  const double c = std::abs(std::cos(th)), s = std::abs(std::sin(th));
  const int tw = std::max(1, static_cast<int>(std::ceil(scale * (w * c + h * s) - 1e-9)));
  const int th_ = std::max(1, static_cast<int>(std::ceil(scale * (w * s + h * c) - 1e-9)));
  return {tw, th_};
}

inline TransformedSprite transform_sprite(const Sprite& sprite, double scale, double rotation_deg) {
  const int w = sprite.patch.width(), h = sprite.patch.height();
  const auto [tw, th] = transformed_extent(w, h, scale, rotation_deg);
  Raster pm_src(w, h, 1);
  for (std::size_t i = 0; i < pm_src.size(); ++i) {
    pm_src.pixels()[i] = sprite.patch.pixels()[i] * sprite.alpha.pixels()[i];
  }
  const double rad = rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double ocx = (tw - 1) / 2.0, ocy = (th - 1) / 2.0;
  const double scx = (w - 1) / 2.0, scy = (h - 1) / 2.0;
  TransformedSprite out{Raster(tw, th, 1), Raster(tw, th, 1)};
  for (int v = 0; v < th; ++v) {
    for (int u = 0; u < tw; ++u) {
      const double dx = (u - ocx) / scale, dy = (v - ocy) / scale;
      const double sx = detail::snap(scx + c * dx + s * dy);
      const double sy = detail::snap(scy - s * dx + c * dy);
      const double a = detail::sample_bilinear(sprite.alpha, sx, sy, 0, 0.0);
      const double p = detail::sample_bilinear(pm_src, sx, sy, 0, 0.0);
      out.alpha.at(u, v) = std::clamp(static_cast<float>(a), 0.0f, 1.0f);
      out.premultiplied.at(u, v) = std::clamp(static_cast<float>(std::min(p, a)), 0.0f, 1.0f);
    }
  }
  return out;
}

/// out = alpha * sprite + (1 - alpha) * canvas over the sprite's box.
inline void composite(Raster& canvas, const TransformedSprite& ts, int x0, int y0) {
  for (int v = 0; v < ts.alpha.height(); ++v) {
    for (int u = 0; u < ts.alpha.width(); ++u) {
      const float a = ts.alpha.at(u, v);
      if (a <= 0.0f) continue;
      const float pm = ts.premultiplied.at(u, v);
      for (int c = 0; c < canvas.channels(); ++c) {
        float& dst = canvas.at(x0 + u, y0 + v, c);
        dst = std::clamp(pm + (1.0f - a) * dst, 0.0f, 1.0f);
      }
    }
  }
}

namespace stream_label {
constexpr std::uint64_t layout = 1;
constexpr std::uint64_t background_policy = 2;
constexpr std::uint64_t global_policy = 3;
}  // namespace stream_label

inline void check_bank(const SpriteBank& bank) {
  if (bank.backgrounds.empty() || bank.fish.empty() || bank.dolphins.empty()) {
    throw std::invalid_argument("sprite bank must hold at least one background, fish and dolphin");
  }
}

/// Canvas after the background policy, before any sprite is pasted.
inline Raster scene_background(const SpriteBank& bank, const SceneRecord& rec, const SeedStream& stream,
                               const SceneConfig& cfg) {
  const Raster& bg = bank.backgrounds.at(static_cast<std::size_t>(rec.background_index));
  Raster canvas = resize(bg, cfg.canvas_width, cfg.canvas_height);
  if (canvas.channels() != 1) {
    Raster gray(canvas.width(), canvas.height(), 1);
    for (std::size_t i = 0; i < gray.size(); ++i) {
      gray.pixels()[i] = (canvas.pixels()[3 * i] + canvas.pixels()[3 * i + 1] + canvas.pixels()[3 * i + 2]) / 3.0f;
    }
    canvas = std::move(gray);
  }
  return apply_background_policy(canvas, stream.child(stream_label::background_policy), cfg.policy);
}

/// Background plus pasted sprites, before the global policy.
inline Raster render_composite(const SpriteBank& bank, const SceneRecord& rec, const SeedStream& stream,
                               const SceneConfig& cfg) {
  Raster canvas = scene_background(bank, rec, stream, cfg);
  for (const auto& p : rec.placements) {
    const auto& sprite = bank.of(p.species).at(static_cast<std::size_t>(p.sprite_index));
    composite(canvas, transform_sprite(sprite, p.scale, p.rotation_deg), p.x, p.y);
  }
  return canvas;
}

/// Re-renders a scene from its record alone (plus the stream its seed path
/// names). Used both by compose_scene and to audit stored datasets.
inline Raster render_scene(const SpriteBank& bank, const SceneRecord& rec, const SeedStream& stream,
                           const SceneConfig& cfg) {
  const Raster canvas = to_three_channels(render_composite(bank, rec, stream, cfg));
  return apply_global_policy(canvas, stream.child(stream_label::global_policy), cfg.policy);
}

struct Scene {
  Raster image;
  SceneRecord record;
};

/// Draws every layout choice (background, counts, sprites, pose, position)
/// from the stream's layout child without rendering anything.
inline SceneRecord draw_layout(const SpriteBank& bank, const SeedStream& stream, const SceneConfig& cfg) {
  check_bank(bank);
  SeedStream s = stream.child(stream_label::layout);
  SceneRecord rec;
  rec.seed_path = stream.path();
  rec.background_index = static_cast<int>(s.uniform_int(0, static_cast<std::int64_t>(bank.backgrounds.size())));
  rec.fish_count = static_cast<int>(s.uniform_int(0, cfg.max_fish + 1));
  rec.dolphin_count = static_cast<int>(s.uniform_int(0, cfg.max_dolphin + 1));

  // Dolphins are pasted first so the smaller fish stay on top.
  auto place = [&](Species species) {
    const auto& sprites = bank.of(species);
    Placement p;
    p.species = species;
    p.sprite_index = static_cast<int>(s.uniform_int(0, static_cast<std::int64_t>(sprites.size())));
    const auto& sp = sprites[static_cast<std::size_t>(p.sprite_index)];
    for (int attempt = 0; attempt < cfg.placement_attempts; ++attempt) {
      p.scale = cfg.sprite_scale.draw(s);
      p.rotation_deg = cfg.sprite_rotation_deg.draw(s);
      const auto [tw, th] = transformed_extent(sp.patch.width(), sp.patch.height(), p.scale, p.rotation_deg);
      if (tw > cfg.canvas_width || th > cfg.canvas_height) continue;
      p.x = static_cast<int>(s.uniform_int(0, cfg.canvas_width - tw + 1));
      p.y = static_cast<int>(s.uniform_int(0, cfg.canvas_height - th + 1));
      rec.placements.push_back(p);
      return;
    }
    throw PlacementError(std::string("cannot place ") + to_string(species) + " sprite " +
                         std::to_string(p.sprite_index) + " inside a " + std::to_string(cfg.canvas_width) +
                         "x" + std::to_string(cfg.canvas_height) + " canvas");
  };
  for (int i = 0; i < rec.dolphin_count; ++i) place(Species::dolphin);
  for (int i = 0; i < rec.fish_count; ++i) place(Species::fish);
  return rec;
}

inline Scene compose_scene(const SpriteBank& bank, const SeedStream& stream, const SceneConfig& cfg) {
  Scene scene;
  scene.record = draw_layout(bank, stream, cfg);
  scene.image = render_scene(bank, scene.record, stream, cfg);
  return scene;
}

/// True when every placement's transformed box lies inside the canvas and the
/// counts match the placement tallies.
inline bool record_consistent(const SpriteBank& bank, const SceneRecord& rec, const SceneConfig& cfg) {
  int fish = 0, dolphins = 0;
  for (const auto& p : rec.placements) {
    const auto& sprites = bank.of(p.species);
    if (p.sprite_index < 0 || static_cast<std::size_t>(p.sprite_index) >= sprites.size()) return false;
    const auto& sp = sprites[static_cast<std::size_t>(p.sprite_index)];
    const auto [tw, th] = transformed_extent(sp.patch.width(), sp.patch.height(), p.scale, p.rotation_deg);
    if (p.x < 0 || p.y < 0 || p.x + tw > cfg.canvas_width || p.y + th > cfg.canvas_height) return false;
    (p.species == Species::fish ? fish : dolphins)++;
  }
  return fish == rec.fish_count && dolphins == rec.dolphin_count && rec.fish_count <= cfg.max_fish &&
         rec.dolphin_count <= cfg.max_dolphin && rec.background_index >= 0 &&
         static_cast<std::size_t>(rec.background_index) < bank.backgrounds.size();
}

}  // namespace sonarcount
