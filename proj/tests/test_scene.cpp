#include <map>

#include "test_support.hpp"

using namespace sonarcount;
using sonarcount::testing::TempDir;
using sonarcount::testing::random_raster;

namespace {

SceneConfig small_config(int canvas = 64) {
  SceneConfig cfg;
  cfg.canvas_width = cfg.canvas_height = canvas;
  cfg.max_fish = 5;
  cfg.max_dolphin = 2;
  return cfg;
}

const SpriteBank& shared_bank() {
  static const SpriteBank bank = synthetic::make_bank(synthetic::SourceSpec{}, 17);
  return bank;
}

Sprite opaque_sprite(Species species, int w, int h, float value) {
  Sprite s;
  s.species = species;
  s.patch = Raster(w, h, 1, value);
  s.alpha = Raster(w, h, 1, 1.0f);
  return s;
}

}  // namespace

// --- extract_sprites --------------------------------------------------------

TEST(ExtractSprites, NoAnnotationsLeavesImageUnchanged) {
  const Raster img = random_raster(20, 20, 1, 1);
  const auto ex = extract_sprites(img, {});
  EXPECT_TRUE(ex.sprites.empty());
  EXPECT_EQ(ex.background, img);
}

TEST(ExtractSprites, UniformImageFillsToSameValue) {
  const Raster img(10, 10, 1, 0.3f);
  const auto ex = extract_sprites(img, {{Species::fish, {4, 4, 2, 2}, std::nullopt}});
  ASSERT_EQ(ex.sprites.size(), 1u);
  for (std::size_t i = 0; i < img.pixels().size(); ++i) EXPECT_NEAR(ex.background.pixels()[i], 0.3f, 1e-6);
  EXPECT_EQ(ex.sprites[0].patch, Raster(2, 2, 1, 0.3f));
  EXPECT_EQ(ex.sprites[0].alpha, Raster(2, 2, 1, 1.0f));
}

TEST(ExtractSprites, RowRampIsReconstructed) {
  // Rows are constant and brightness grows linearly with y. Row-wise fill
  // restores each row value, and a symmetric blur leaves a linear ramp as is.
  Raster img(30, 30, 1);
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 30; ++x) img.at(x, y) = 0.1f + 0.02f * y;
  }
  Raster marked = img;
  for (int y = 10; y < 18; ++y) {
    for (int x = 12; x < 20; ++x) marked.at(x, y) = 1.0f;  // the object
  }
  const auto ex = extract_sprites(marked, {{Species::dolphin, {12, 10, 8, 8}, std::nullopt}}, "ramp");
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 30; ++x) EXPECT_NEAR(ex.background.at(x, y), img.at(x, y), 1e-5) << x << "," << y;
  }
  EXPECT_EQ(ex.sprites[0].patch, Raster(8, 8, 1, 1.0f));
  EXPECT_EQ(ex.sprites[0].source_id, "ramp");
}

TEST(ExtractSprites, HoleTakesMedianOfRowNeighboursBeforeSmoothing) {
  // Left neighbour 0.2, right neighbour 0.6 on every row: the median of the
  // two is 0.4, and a vertically constant, horizontally symmetric setup keeps
  // the centre column at 0.4 after the blur.
  Raster img(21, 9, 1);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 21; ++x) img.at(x, y) = x < 10 ? 0.2f : (x > 10 ? 0.6f : 0.9f);
  }
  const auto ex = extract_sprites(img, {{Species::fish, {10, 0, 1, 9}, std::nullopt}});
  for (int y = 0; y < 9; ++y) EXPECT_NEAR(ex.background.at(10, y), 0.4f, 1e-6);
  // Pixels outside the hole are untouched.
  EXPECT_EQ(ex.background.at(9, 4), 0.2f);
  EXPECT_EQ(ex.background.at(11, 4), 0.6f);
}

TEST(ExtractSprites, NonHolePixelsNeverChange) {
  const Raster img = random_raster(40, 30, 3, 2);
  const std::vector<Annotation> ann{{Species::fish, {3, 4, 5, 6}, std::nullopt},
                                    {Species::dolphin, {20, 10, 12, 7}, std::nullopt}};
  const auto ex = extract_sprites(img, ann);
  ASSERT_EQ(ex.sprites.size(), 2u);
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 40; ++x) {
      bool hole = false;
      for (const auto& a : ann) hole |= x >= a.box.x && x < a.box.x + a.box.w && y >= a.box.y && y < a.box.y + a.box.h;
      if (hole) continue;
      for (int c = 0; c < 3; ++c) EXPECT_EQ(ex.background.at(x, y, c), img.at(x, y, c));
    }
  }
  EXPECT_TRUE(sonarcount::testing::in_unit_range(ex.background));
}

TEST(ExtractSprites, UsesMaskWhenGiven) {
  const Raster img(8, 8, 1, 0.5f);
  Raster mask(3, 2, 1, 0.0f);
  mask.at(1, 1) = 0.7f;
  const auto ex = extract_sprites(img, {{Species::fish, {1, 1, 3, 2}, mask}});
  EXPECT_EQ(ex.sprites[0].alpha, mask);
}

TEST(ExtractSprites, RejectsBadBoxes) {
  const Raster img(8, 8, 1);
  EXPECT_THROW(extract_sprites(img, {{Species::fish, {6, 6, 4, 1}, std::nullopt}}), std::invalid_argument);
  EXPECT_THROW(extract_sprites(img, {{Species::fish, {-1, 0, 2, 2}, std::nullopt}}), std::invalid_argument);
  EXPECT_THROW(extract_sprites(img, {{Species::fish, {0, 0, 0, 2}, std::nullopt}}), std::invalid_argument);
  EXPECT_THROW(extract_sprites(img, {{Species::fish, {0, 0, 2, 2}, Raster(3, 3, 1, 1.0f)}}), std::invalid_argument);
}

TEST(SpriteBank, TwentyImagesGiveTwentyFourFishNineDolphinsTwentyBackgrounds) {
  TempDir dir;
  const auto sources = synthetic::make_sources(synthetic::SourceSpec{}, 5);
  const auto ann = synthetic::write_sources(sources, dir.path());
  const auto annotated = load_annotations(ann, dir.path());
  const SpriteBank bank = build_bank(annotated, dir.path());
  EXPECT_EQ(bank.fish.size(), 24u);
  EXPECT_EQ(bank.dolphins.size(), 9u);
  EXPECT_EQ(bank.backgrounds.size(), 20u);

  save_bank(bank, dir / "bank");
  const SpriteBank back = load_bank(dir / "bank");
  ASSERT_EQ(back.fish.size(), 24u);
  ASSERT_EQ(back.dolphins.size(), 9u);
  ASSERT_EQ(back.backgrounds.size(), 20u);
  // Stored at 8 bits: a second save/load is exact.
  save_bank(back, dir / "bank2");
  const SpriteBank again = load_bank(dir / "bank2");
  for (std::size_t i = 0; i < 24; ++i) {
    EXPECT_EQ(again.fish[i].patch, back.fish[i].patch);
    EXPECT_EQ(again.fish[i].alpha, back.fish[i].alpha);
  }
  EXPECT_LE(sonarcount::testing::max_abs_diff(back.backgrounds[3], bank.backgrounds[3]), 1.0 / 510.0 + 1e-7);
}

TEST(SpriteBank, SpriteValidationRequiresSomeAlpha) {
  Sprite s = opaque_sprite(Species::fish, 3, 3, 0.5f);
  EXPECT_NO_THROW(s.validate());
  s.alpha = Raster(3, 3, 1, 0.0f);
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.alpha = Raster(2, 3, 1, 1.0f);
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

// --- compose_scene ----------------------------------------------------------

TEST(ComposeScene, ZeroMaximaGiveEmptyScene) {
  SceneConfig cfg = small_config();
  cfg.max_fish = 0;
  cfg.max_dolphin = 0;
  const Scene s = compose_scene(shared_bank(), derive_stream(1, {0}), cfg);
  EXPECT_TRUE(s.record.placements.empty());
  EXPECT_EQ(s.record.fish_count, 0);
  EXPECT_EQ(s.record.dolphin_count, 0);
}

TEST(ComposeScene, CountsStayWithinPaperRange) {
  SceneConfig cfg;  // 224 canvas, 0..34 fish, 0..3 dolphins
  for (std::uint64_t i = 0; i < 300; ++i) {
    const auto rec = draw_layout(shared_bank(), derive_stream(3, {i}), cfg);
    EXPECT_GE(rec.fish_count, 0);
    EXPECT_LE(rec.fish_count, 34);
    EXPECT_GE(rec.dolphin_count, 0);
    EXPECT_LE(rec.dolphin_count, 3);
  }
}

TEST(ComposeScene, LabelSoundnessAndContainment) {
  const SceneConfig cfg = small_config();
  const auto& bank = shared_bank();
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const auto rec = draw_layout(bank, derive_stream(11, {i}), cfg);
    int fish = 0, dolphins = 0;
    for (const auto& p : rec.placements) {
      (p.species == Species::fish ? fish : dolphins)++;
      const auto& sp = bank.of(p.species).at(static_cast<std::size_t>(p.sprite_index));
      // Rotated-rectangle extent computed directly from the corner points.
      const double th = p.rotation_deg * std::numbers::pi / 180.0;
      double minx = 1e9, maxx = -1e9, miny = 1e9, maxy = -1e9;
      for (int cx : {0, 1}) {
        for (int cy : {0, 1}) {
          const double x = p.scale * (cx * sp.patch.width()), y = p.scale * (cy * sp.patch.height());
          const double rx = std::cos(th) * x - std::sin(th) * y, ry = std::sin(th) * x + std::cos(th) * y;
          minx = std::min(minx, rx);
          maxx = std::max(maxx, rx);
          miny = std::min(miny, ry);
          maxy = std::max(maxy, ry);
        }
      }
      EXPECT_GE(p.x, 0);
      EXPECT_GE(p.y, 0);
      EXPECT_LE(p.x + (maxx - minx), cfg.canvas_width + 1e-6);
      EXPECT_LE(p.y + (maxy - miny), cfg.canvas_height + 1e-6);
      EXPECT_GE(p.scale, 0.7);
      EXPECT_LT(p.scale, 1.3);
      EXPECT_GE(p.rotation_deg, 0.0);
      EXPECT_LT(p.rotation_deg, 360.0);
    }
    EXPECT_EQ(fish, rec.fish_count);
    EXPECT_EQ(dolphins, rec.dolphin_count);
    EXPECT_TRUE(record_consistent(bank, rec, cfg));
  }
}

TEST(ComposeScene, FishCountsAreRoughlyUniform) {
  SceneConfig cfg;
  std::vector<int> fish(35), dolphins(4);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto rec = draw_layout(shared_bank(), derive_stream(23, {static_cast<std::uint64_t>(i)}), cfg);
    fish[static_cast<std::size_t>(rec.fish_count)]++;
    dolphins[static_cast<std::size_t>(rec.dolphin_count)]++;
  }
  for (int c : fish) EXPECT_NEAR(c / static_cast<double>(n), 1.0 / 35.0, 0.3 / 35.0);
  for (int c : dolphins) EXPECT_NEAR(c / static_cast<double>(n), 0.25, 0.3 * 0.25);
}

TEST(ComposeScene, ReplayFromRecordIsBitExact) {
  const SceneConfig cfg = small_config();
  for (std::uint64_t i = 0; i < 30; ++i) {
    const auto stream = derive_stream(8, {i});
    const Scene s = compose_scene(shared_bank(), stream, cfg);
    EXPECT_EQ(render_scene(shared_bank(), s.record, stream, cfg), s.image);
    EXPECT_EQ(compose_scene(shared_bank(), stream, cfg).image, s.image);
    EXPECT_EQ(s.image.channels(), 3);
    EXPECT_EQ(s.image.width(), 64);
  }
}

TEST(ComposeScene, PixelsOutsidePasteBoxesShowAugmentedBackground) {
  SceneConfig cfg = small_config();
  cfg.policy.global = PolicyConfig::identity().global;
  const auto& bank = shared_bank();
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto stream = derive_stream(31, {i});
    const Scene s = compose_scene(bank, stream, cfg);
    const Raster bg = to_three_channels(scene_background(bank, s.record, stream, cfg));
    std::vector<std::uint8_t> covered(64 * 64, 0);
    for (const auto& p : s.record.placements) {
      const auto& sp = bank.of(p.species)[static_cast<std::size_t>(p.sprite_index)];
      const auto [tw, th] = transformed_extent(sp.patch.width(), sp.patch.height(), p.scale, p.rotation_deg);
      for (int y = p.y; y < p.y + th; ++y) {
        for (int x = p.x; x < p.x + tw; ++x) covered[static_cast<std::size_t>(y * 64 + x)] = 1;
      }
    }
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        if (covered[static_cast<std::size_t>(y * 64 + x)]) continue;
        for (int c = 0; c < 3; ++c) ASSERT_EQ(s.image.at(x, y, c), bg.at(x, y, c));
      }
    }
  }
}

TEST(ComposeScene, OpaqueUnrotatedSpriteIsPastedVerbatim) {
  SpriteBank bank;
  bank.backgrounds.push_back(Raster(16, 16, 1, 0.1f));
  bank.fish.push_back(opaque_sprite(Species::fish, 4, 3, 0.8f));
  Sprite half = opaque_sprite(Species::dolphin, 2, 2, 0.6f);
  half.alpha = Raster(2, 2, 1, 0.25f);
  bank.dolphins.push_back(half);

  SceneConfig cfg;
  cfg.canvas_width = cfg.canvas_height = 16;
  cfg.policy = PolicyConfig::identity();
  SceneRecord rec;
  rec.placements = {{Species::fish, 0, 2, 3, 1.0, 0.0}, {Species::dolphin, 0, 10, 10, 1.0, 0.0}};
  rec.fish_count = rec.dolphin_count = 1;
  const Raster out = render_composite(bank, rec, derive_stream(0, {}), cfg);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      float expected = 0.1f;
      if (x >= 2 && x < 6 && y >= 3 && y < 6) expected = 0.8f;
      if (x >= 10 && x < 12 && y >= 10 && y < 12) expected = 0.25f * 0.6f + 0.75f * 0.1f;
      EXPECT_NEAR(out.at(x, y), expected, 1e-6) << x << "," << y;
    }
  }
}

TEST(ComposeScene, InfeasiblePlacementFails) {
  SceneConfig cfg = small_config(6);
  cfg.max_fish = 0;
  cfg.max_dolphin = 3;
  bool threw = false;
  for (std::uint64_t i = 0; i < 10 && !threw; ++i) {
    try {
      draw_layout(shared_bank(), derive_stream(1, {i}), cfg);
    } catch (const PlacementError&) {
      threw = true;
    }
  }
  EXPECT_TRUE(threw);
}

TEST(ComposeScene, RequiresNonEmptyBank) {
  SpriteBank bank = shared_bank();
  bank.dolphins.clear();
  EXPECT_THROW(compose_scene(bank, derive_stream(1, {}), small_config()), std::invalid_argument);
}

TEST(ComposeScene, SpritesAreDrawnUniformly) {
  const SceneConfig cfg = small_config();
  std::map<int, int> uses;
  int total = 0;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    for (const auto& p : draw_layout(shared_bank(), derive_stream(2, {i}), cfg).placements) {
      if (p.species != Species::fish) continue;
      uses[p.sprite_index]++;
      ++total;
    }
  }
  EXPECT_EQ(uses.size(), 24u);
  for (const auto& [idx, n] : uses) EXPECT_NEAR(n / static_cast<double>(total), 1.0 / 24, 0.3 / 24) << idx;
}
