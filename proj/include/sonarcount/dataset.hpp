#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sonarcount/png_io.hpp"
#include "sonarcount/scene.hpp"

namespace sonarcount {

inline constexpr const char* kGeneratorVersion = "sonarcount-scenegen/1";

struct DatasetManifest {
  std::uint64_t root_seed = 0;
  std::string generator_version = kGeneratorVersion;
  SceneConfig config;
  std::vector<SceneRecord> records;

  std::size_t size() const { return records.size(); }
};

class GenerationError : public std::runtime_error {
 public:
  GenerationError(std::int64_t scene_id, const std::string& what)
      : std::runtime_error("scene " + std::to_string(scene_id) + ": " + what), scene_id_(scene_id) {}
  std::int64_t scene_id() const { return scene_id_; }

 private:
  std::int64_t scene_id_;
};

inline std::string scene_filename(std::int64_t id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%07lld.png", static_cast<long long>(id));
  return buf;
}

// ---------------------------------------------------------------------------
// JSON encoding. nlohmann::json objects are std::map backed, so keys come out
// in alphabetical order and the dump is byte-stable.
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Interval& i) { return nlohmann::json::array({i.lo, i.hi}); }

inline Interval interval_from_json(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

inline nlohmann::json to_json(const PolicyConfig& p) {
  const auto& b = p.background;
  const auto& g = p.global;
  return {
      {"background",
       {{"blur_sigma", to_json(b.blur_sigma)},
        {"hflip_p", b.hflip_p},
        {"rotation_deg", to_json(b.rotation_deg)},
        {"scale", to_json(b.scale)},
        {"translate_frac", to_json(b.translate_frac)},
        {"vflip_p", b.vflip_p}}},
      {"global",
       {{"blur_sigma", to_json(g.blur_sigma)},
        {"brightness", to_json(g.brightness)},
        {"color_delta", to_json(g.color_delta)},
        {"dropout_block", nlohmann::json::array({g.dropout_block_min, g.dropout_block_max})},
        {"dropout_rate", to_json(g.dropout_rate)},
        {"grayscale_p", g.grayscale_p}}},
  };
}

inline PolicyConfig policy_from_json(const nlohmann::json& j) {
  PolicyConfig p;
  const auto& b = j.at("background");
  p.background.blur_sigma = interval_from_json(b.at("blur_sigma"));
  p.background.hflip_p = b.at("hflip_p").get<double>();
  p.background.rotation_deg = interval_from_json(b.at("rotation_deg"));
  p.background.scale = interval_from_json(b.at("scale"));
  p.background.translate_frac = interval_from_json(b.at("translate_frac"));
  p.background.vflip_p = b.at("vflip_p").get<double>();
  const auto& g = j.at("global");
  p.global.blur_sigma = interval_from_json(g.at("blur_sigma"));
  p.global.brightness = interval_from_json(g.at("brightness"));
  p.global.color_delta = interval_from_json(g.at("color_delta"));
  p.global.dropout_block_min = g.at("dropout_block").at(0).get<int>();
  p.global.dropout_block_max = g.at("dropout_block").at(1).get<int>();
  p.global.dropout_rate = interval_from_json(g.at("dropout_rate"));
  p.global.grayscale_p = g.at("grayscale_p").get<double>();
  return p;
}

inline nlohmann::json to_json(const Placement& p) {
  return {{"rotation_deg", p.rotation_deg}, {"scale", p.scale},   {"species", to_string(p.species)},
          {"sprite_index", p.sprite_index}, {"x", p.x},           {"y", p.y}};
}

inline nlohmann::json to_json(const SceneRecord& r) {
  nlohmann::json placements = nlohmann::json::array();
  for (const auto& p : r.placements) placements.push_back(to_json(p));
  return {{"background_index", r.background_index},
          {"dolphin_count", r.dolphin_count},
          {"file", r.file},
          {"fish_count", r.fish_count},
          {"id", r.id},
          {"placements", std::move(placements)},
          {"seed_path", r.seed_path}};
}

inline SceneRecord record_from_json(const nlohmann::json& j) {
  SceneRecord r;
  r.background_index = j.at("background_index").get<int>();
  r.dolphin_count = j.at("dolphin_count").get<int>();
  r.file = j.at("file").get<std::string>();
  r.fish_count = j.at("fish_count").get<int>();
  r.id = j.at("id").get<std::int64_t>();
  for (const auto& pj : j.at("placements")) {
    Placement p;
    p.rotation_deg = pj.at("rotation_deg").get<double>();
    p.scale = pj.at("scale").get<double>();
    p.species = species_from_string(pj.at("species").get<std::string>());
    p.sprite_index = pj.at("sprite_index").get<int>();
    p.x = pj.at("x").get<int>();
    p.y = pj.at("y").get<int>();
    r.placements.push_back(p);
  }
  r.seed_path = j.at("seed_path").get<std::vector<std::uint64_t>>();
  return r;
}

inline nlohmann::json manifest_header(const DatasetManifest& m) {
  const auto& c = m.config;
  return {{"canvas", {{"height", c.canvas_height}, {"width", c.canvas_width}}},
          {"count_ranges", {{"max_dolphin", c.max_dolphin}, {"max_fish", c.max_fish}}},
          {"generator_version", m.generator_version},
          {"n", m.records.size()},
          {"placement_attempts", c.placement_attempts},
          {"policy", to_json(c.policy)},
          {"root_seed", m.root_seed},
          {"sprite_rotation_deg", to_json(c.sprite_rotation_deg)},
          {"sprite_scale", to_json(c.sprite_scale)}};
}

/// JSON Lines: one header object, then one SceneRecord per line.
inline std::string manifest_to_string(const DatasetManifest& m) {
  std::string out = manifest_header(m).dump() + "\n";
  for (const auto& r : m.records) out += to_json(r).dump() + "\n";
  return out;
}

inline DatasetManifest manifest_from_stream(std::istream& in, const std::string& name = "<manifest>") {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(name + ": missing manifest header");
  DatasetManifest m;
  try {
    const auto h = nlohmann::json::parse(line);
    m.root_seed = h.at("root_seed").get<std::uint64_t>();
    m.generator_version = h.at("generator_version").get<std::string>();
    m.config.canvas_width = h.at("canvas").at("width").get<int>();
    m.config.canvas_height = h.at("canvas").at("height").get<int>();
    m.config.max_fish = h.at("count_ranges").at("max_fish").get<int>();
    m.config.max_dolphin = h.at("count_ranges").at("max_dolphin").get<int>();
    m.config.placement_attempts = h.at("placement_attempts").get<int>();
    m.config.policy = policy_from_json(h.at("policy"));
    m.config.sprite_rotation_deg = interval_from_json(h.at("sprite_rotation_deg"));
    m.config.sprite_scale = interval_from_json(h.at("sprite_scale"));
    const auto n = h.at("n").get<std::size_t>();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      m.records.push_back(record_from_json(nlohmann::json::parse(line)));
    }
    if (m.records.size() != n) throw std::runtime_error(name + ": record count does not match header");
    for (std::size_t i = 0; i < m.records.size(); ++i) {
      if (m.records[i].id != static_cast<std::int64_t>(i)) {
        throw std::runtime_error(name + ": record ids must run 0..n-1 in order; found " +
                                 std::to_string(m.records[i].id) + " at position " + std::to_string(i));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(name + ": malformed manifest: " + e.what());
  }
  return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  return manifest_from_stream(in, path.string());
}

inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  out << manifest_to_string(m);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Rethrows the
/// exception raised by the lowest index, so failures are order-independent.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t nthreads = std::min<std::size_t>(std::max(1, workers), std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = n;
  std::exception_ptr failure;
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  if (nthreads <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

/// Scene i is rendered from derive_stream(root_seed, {i}).
inline Scene simulate_scene(const SpriteBank& bank, std::uint64_t root_seed, std::int64_t id,
                            const SceneConfig& cfg) {
  try {
    Scene s = compose_scene(bank, derive_stream(root_seed, {static_cast<std::uint64_t>(id)}), cfg);
    s.record.id = id;
    s.record.file = scene_filename(id);
    return s;
  } catch (const std::exception& e) {
    throw GenerationError(id, e.what());
  }
}

/// In-memory dataset, used by the sweep and by tests.
inline std::vector<Scene> simulate_scenes(const SpriteBank& bank, std::size_t n, std::uint64_t root_seed,
                                          const SceneConfig& cfg, int workers = 1) {
  check_bank(bank);
  std::vector<Scene> scenes(n);
  parallel_for(n, workers, [&](std::size_t i) {
    scenes[i] = simulate_scene(bank, root_seed, static_cast<std::int64_t>(i), cfg);
  });
  return scenes;
}

/// Writes scene_%07d.png for every scene plus manifest.jsonl into out_dir.
/// Output bytes depend only on (bank, n, root_seed, cfg, generator version).
inline DatasetManifest generate_dataset(const SpriteBank& bank, std::size_t n, std::uint64_t root_seed,
                                        const SceneConfig& cfg, const std::filesystem::path& out_dir,
                                        int workers = 1) {
  if (auto err = cfg.validate(); !err.empty()) throw std::invalid_argument("scene config: " + err);
  DatasetManifest m;
  m.root_seed = root_seed;
  m.config = cfg;
  if (n > 0) check_bank(bank);
  std::filesystem::create_directories(out_dir);
  m.records.resize(n);
  parallel_for(n, workers, [&](std::size_t i) {
    Scene s = simulate_scene(bank, root_seed, static_cast<std::int64_t>(i), cfg);
    try {
      save_raster(s.image, out_dir / s.record.file);
    } catch (const std::exception& e) {
      throw GenerationError(s.record.id, e.what());
    }
    m.records[i] = std::move(s.record);
  });
  save_manifest(m, out_dir / "manifest.jsonl");
  return m;
}

/// Deterministic partition by a hash of (root seed, record id). The first
/// round(n * train_fraction) records in hash order form the training split;
/// both halves keep ascending id order.
inline std::pair<DatasetManifest, DatasetManifest> split_dataset(const DatasetManifest& m, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split_dataset: train fraction must lie strictly between 0 and 1");
  }
  std::vector<std::size_t> order(m.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto key = [&](std::size_t i) {
    return detail::mix64(m.root_seed ^ detail::mix64(static_cast<std::uint64_t>(m.records[i].id) + detail::kGolden));
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ka = key(a), kb = key(b);
    return ka != kb ? ka < kb : m.records[a].id < m.records[b].id;
  });
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(m.records.size()) * train_fraction));
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> val_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());

  DatasetManifest train = m, val = m;
  train.records.clear();
  val.records.clear();
  for (auto i : train_idx) train.records.push_back(m.records[i]);
  for (auto i : val_idx) val.records.push_back(m.records[i]);
  return {std::move(train), std::move(val)};
}

}  // namespace sonarcount
