#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sonarcount/bank.hpp"
#include "sonarcount/png_io.hpp"
#include "sonarcount/scene.hpp"
#include "sonarcount/seed_stream.hpp"

// Stand-in for annotated field recordings: sonar-like source images with
// bright oval fish returns and elongated dolphin silhouettes, plus the
// bounding boxes and alpha masks an annotator would supply.

namespace sonarcount::synthetic {

struct SourceSpec {
  int images = 20;
  int fish = 24;
  int dolphins = 9;
  int width = 64;
  int height = 64;
  double fish_length = 7.0;      // pixels, major axis
  double dolphin_length = 20.0;  // pixels, body length
};

struct SourceImage {
  std::string name;
  Raster image;
  std::vector<Annotation> annotations;
};

/// Dark water column down the middle, seabed texture brightening with range,
/// speckle, and a few dim bubble-like blobs that are not annotated.
inline Raster sonar_background(int width, int height, SeedStream s) {
  Raster r(width, height, 1);
  const double base = s.uniform(0.08, 0.16);
  const double gain = s.uniform(0.10, 0.22);
  const double nadir = s.uniform(0.06, 0.12) * width;
  const double phase = s.uniform(0.0, 2.0 * std::numbers::pi);
  const double freq = s.uniform(0.15, 0.35);
  for (int y = 0; y < height; ++y) {
    const double band = 0.03 * std::sin(freq * y + phase);
    for (int x = 0; x < width; ++x) {
      const double range = std::abs(x - (width - 1) / 2.0);
      const double seabed = range < nadir ? 0.0 : gain * std::min(1.0, (range - nadir) / (0.5 * width));
      const double speckle = 0.06 * (s.uniform() - 0.5);
      r.at(x, y) = std::clamp(static_cast<float>(base + seabed + band + speckle), 0.0f, 1.0f);
    }
  }
  const int blobs = static_cast<int>(s.uniform_int(0, 3));
  for (int b = 0; b < blobs; ++b) {
    const double cx = s.uniform(0, width), cy = s.uniform(0, height), rad = s.uniform(1.5, 3.0);
    const double amp = s.uniform(0.08, 0.15);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double d2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (rad * rad);
        r.at(x, y) = std::clamp(static_cast<float>(r.at(x, y) + amp * std::exp(-d2)), 0.0f, 1.0f);
      }
    }
  }
  return r;
}

struct ObjectPatch {
  Raster patch;
  Raster alpha;
};

// Smooth coverage of an ellipse at pixel (x, y), antialiased over ~1px.
inline double ellipse_coverage(double x, double y, double cx, double cy, double a, double b) {
  const double d = std::sqrt(((x - cx) * (x - cx)) / (a * a) + ((y - cy) * (y - cy)) / (b * b));
  const double edge = (d - 1.0) * std::min(a, b);
  return std::clamp(0.5 - edge, 0.0, 1.0);
}

inline ObjectPatch fish_patch(double length, SeedStream s) {
  const double a = 0.5 * length * s.uniform(0.85, 1.15);
  const double b = a * s.uniform(0.4, 0.6);
  const double brightness = s.uniform(0.8, 1.0);
  const int w = static_cast<int>(std::ceil(2 * a)) + 2, h = static_cast<int>(std::ceil(2 * b)) + 2;
  ObjectPatch o{Raster(w, h, 1), Raster(w, h, 1)};
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double cov = ellipse_coverage(x, y, cx, cy, a, b);
      const double core = ellipse_coverage(x, y, cx, cy, 0.5 * a, 0.5 * b);
      o.alpha.at(x, y) = static_cast<float>(cov);
      o.patch.at(x, y) = static_cast<float>(brightness * (0.8 + 0.2 * core));
    }
  }
  return o;
}

/// Elongated body with a forked tail: a bright outline around a mid-grey
/// interior, which is how dolphins show up on side-scan returns.
inline ObjectPatch dolphin_patch(double length, SeedStream s) {
  const double a = 0.42 * length * s.uniform(0.9, 1.1);
  const double b = a * s.uniform(0.22, 0.3);
  const double tail = 0.18 * length;
  const int w = static_cast<int>(std::ceil(2 * a + tail)) + 2;
  const int h = static_cast<int>(std::ceil(2 * std::max(b, 0.6 * tail))) + 2;
  ObjectPatch o{Raster(w, h, 1), Raster(w, h, 1)};
  const double cx = 1 + a, cy = (h - 1) / 2.0;
  const double rim = s.uniform(0.85, 1.0), fill = s.uniform(0.45, 0.6);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double body = ellipse_coverage(x, y, cx, cy, a, b);
      const double inner = ellipse_coverage(x, y, cx, cy, a - 1.2, std::max(b - 1.2, 0.3));
      // Fluke: two lobes fanning out behind the body.
      const double t = (x - (cx + a - 1.0)) / tail;
      double fluke = 0.0;
      if (t > 0.0 && t <= 1.0) {
        const double spread = 0.6 * tail * t;
        fluke = std::clamp(1.2 - std::abs(std::abs(y - cy) - spread) / 1.0, 0.0, 1.0);
      }
      const double cov = std::max(body, fluke);
      o.alpha.at(x, y) = static_cast<float>(cov);
      const double shade = std::max(fluke * rim, body * (inner * fill + (1.0 - inner) * rim));
      o.patch.at(x, y) = static_cast<float>(cov > 0 ? std::clamp(shade / cov, 0.0, 1.0) : 0.0);
    }
  }
  return o;
}

namespace detail {

inline bool boxes_overlap(const BoundingBox& a, const BoundingBox& b, int margin) {
  return a.x < b.x + b.w + margin && b.x < a.x + a.w + margin && a.y < b.y + b.h + margin &&
         b.y < a.y + a.h + margin;
}

}  // namespace detail

/// Spreads spec.fish + spec.dolphins objects over spec.images source images
/// without overlap. Deterministic in `seed`.
inline std::vector<SourceImage> make_sources(const SourceSpec& spec, std::uint64_t seed) {
  SeedStream root(seed, {0x50u});
  std::vector<SourceImage> out(static_cast<std::size_t>(spec.images));
  for (int i = 0; i < spec.images; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "source_%03d.png", i);
    out[static_cast<std::size_t>(i)].name = name;
    out[static_cast<std::size_t>(i)].image = sonar_background(spec.width, spec.height, root.child(1).child(static_cast<std::uint64_t>(i)));
  }
  SeedStream assign = root.child(2);
  auto place = [&](Species species, int k) {
    const auto label = static_cast<std::uint64_t>(species == Species::fish ? 0 : 1);
    SeedStream os = root.child(3).child(label).child(static_cast<std::uint64_t>(k));
    ObjectPatch obj = species == Species::fish ? fish_patch(spec.fish_length, os.child(0))
                                               : dolphin_patch(spec.dolphin_length, os.child(0));
    const int w = obj.patch.width(), h = obj.patch.height();
    for (int attempt = 0; attempt < 1000; ++attempt) {
      auto& src = out[static_cast<std::size_t>(assign.uniform_int(0, spec.images))];
      BoundingBox box{static_cast<int>(assign.uniform_int(0, spec.width - w + 1)),
                      static_cast<int>(assign.uniform_int(0, spec.height - h + 1)), w, h};
      const bool clash = std::any_of(src.annotations.begin(), src.annotations.end(),
                                     [&](const Annotation& a) { return detail::boxes_overlap(a.box, box, 2); });
      if (clash) continue;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          float& dst = src.image.at(box.x + x, box.y + y);
          const float al = obj.alpha.at(x, y);
          dst = std::clamp(al * obj.patch.at(x, y) + (1.0f - al) * dst, 0.0f, 1.0f);
        }
      }
      src.annotations.push_back({species, box, obj.alpha});
      return;
    }
    throw std::runtime_error("synthetic sources: no room for object");
  };
  for (int k = 0; k < spec.dolphins; ++k) place(Species::dolphin, k);
  for (int k = 0; k < spec.fish; ++k) place(Species::fish, k);
  return out;
}

/// Writes source PNGs, mask PNGs and annotations.jsonl into dir. Returns the
/// annotation file path.
inline std::filesystem::path write_sources(const std::vector<SourceImage>& sources, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto ann_path = dir / "annotations.jsonl";
  std::ofstream ann(ann_path, std::ios::binary | std::ios::trunc);
  if (!ann) throw std::runtime_error("cannot write " + ann_path.string());
  for (const auto& src : sources) {
    save_raster(src.image, dir / src.name);
    if (src.annotations.empty()) ann << nlohmann::json{{"image", src.name}}.dump() << "\n";
    for (std::size_t k = 0; k < src.annotations.size(); ++k) {
      const auto& a = src.annotations[k];
      const std::string stem = std::filesystem::path(src.name).stem().string();
      const std::string mask = stem + "_mask_" + std::to_string(k) + ".png";
      save_raster(*a.mask, dir / mask);
      ann << nlohmann::json{{"h", a.box.h}, {"image", src.name}, {"mask", mask}, {"species", to_string(a.species)},
                            {"w", a.box.w}, {"x", a.box.x},      {"y", a.box.y}}
                 .dump()
          << "\n";
    }
  }
  return ann_path;
}

/// In-memory bank straight from synthetic sources (no PNG quantization).
inline SpriteBank make_bank(const SourceSpec& spec, std::uint64_t seed) {
  SpriteBank bank;
  for (const auto& src : make_sources(spec, seed)) {
    auto ex = extract_sprites(src.image, src.annotations, src.name);
    for (auto& s : ex.sprites) (s.species == Species::fish ? bank.fish : bank.dolphins).push_back(std::move(s));
    bank.backgrounds.push_back(std::move(ex.background));
  }
  return bank;
}

}  // namespace sonarcount::synthetic
