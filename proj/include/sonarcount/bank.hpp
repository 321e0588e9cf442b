#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sonarcount/png_io.hpp"
#include "sonarcount/scene.hpp"

namespace sonarcount {

/// All annotations belonging to one source image, in file order.
struct AnnotatedImage {
  std::string image;  // path relative to the images directory
  std::vector<Annotation> annotations;
};

/// Reads annotation JSON Lines: {image, species, x, y, w, h, mask?}.
/// A line carrying only "image" registers an image with no objects. Images
/// keep the order of their first appearance.
inline std::vector<AnnotatedImage> load_annotations(const std::filesystem::path& path,
                                                    const std::filesystem::path& images_dir) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open annotations " + path.string());
  std::vector<AnnotatedImage> out;
  std::map<std::string, std::size_t> slot;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
    if (!j.contains("image")) throw std::runtime_error(where + ": missing \"image\"");
    const auto image = j.at("image").get<std::string>();
    auto [it, inserted] = slot.try_emplace(image, out.size());
    if (inserted) out.push_back({image, {}});
    if (!j.contains("species")) continue;
    try {
      Annotation a;
      a.species = species_from_string(j.at("species").get<std::string>());
      a.box = {j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
      if (j.contains("mask") && !j.at("mask").is_null()) {
        a.mask = load_raster(images_dir / j.at("mask").get<std::string>());
      }
      out[it->second].annotations.push_back(std::move(a));
    } catch (const std::exception& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
  }
  return out;
}

/// Extracts every annotated image into one bank: sprites in annotation order,
/// one hole-filled background per image.
inline SpriteBank build_bank(const std::vector<AnnotatedImage>& sources, const std::filesystem::path& images_dir) {
  SpriteBank bank;
  for (const auto& src : sources) {
    Raster img = load_raster(images_dir / src.image);
    auto ex = extract_sprites(img, src.annotations, src.image);
    for (auto& s : ex.sprites) (s.species == Species::fish ? bank.fish : bank.dolphins).push_back(std::move(s));
    bank.backgrounds.push_back(std::move(ex.background));
  }
  return bank;
}

inline void save_bank(const SpriteBank& bank, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json index = {{"backgrounds", nlohmann::json::array()},
                          {"dolphins", nlohmann::json::array()},
                          {"fish", nlohmann::json::array()},
                          {"version", 1}};
  char name[64];
  for (std::size_t i = 0; i < bank.backgrounds.size(); ++i) {
    std::snprintf(name, sizeof(name), "background_%03zu.png", i);
    save_raster(bank.backgrounds[i], dir / name);
    index["backgrounds"].push_back(name);
  }
  auto sprites = [&](const std::vector<Sprite>& list, const char* prefix, const char* key) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      char patch[64], alpha[64];
      std::snprintf(patch, sizeof(patch), "%s_%03zu.png", prefix, i);
      std::snprintf(alpha, sizeof(alpha), "%s_%03zu_alpha.png", prefix, i);
      save_raster(list[i].patch, dir / patch);
      save_raster(list[i].alpha, dir / alpha);
      index[key].push_back({{"alpha", alpha}, {"patch", patch}, {"source_id", list[i].source_id}});
    }
  };
  sprites(bank.fish, "fish", "fish");
  sprites(bank.dolphins, "dolphin", "dolphins");
  std::ofstream out(dir / "bank.json", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write bank index in " + dir.string());
  out << index.dump(2) << "\n";
}

inline SpriteBank load_bank(const std::filesystem::path& dir) {
  std::ifstream in(dir / "bank.json");
  if (!in) throw std::runtime_error("cannot open bank index " + (dir / "bank.json").string());
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed bank index: " + std::string(e.what()));
  }
  SpriteBank bank;
  for (const auto& b : index.at("backgrounds")) bank.backgrounds.push_back(load_raster(dir / b.get<std::string>()));
  auto sprites = [&](const char* key, Species species, std::vector<Sprite>& list) {
    for (const auto& e : index.at(key)) {
      Sprite s;
      s.species = species;
      s.patch = load_raster(dir / e.at("patch").get<std::string>());
      s.alpha = load_raster(dir / e.at("alpha").get<std::string>());
      s.source_id = e.value("source_id", "");
      s.validate();
      list.push_back(std::move(s));
    }
  };
  sprites("fish", Species::fish, bank.fish);
  sprites("dolphins", Species::dolphin, bank.dolphins);
  return bank;
}

}  // namespace sonarcount
