#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sonarcount/augment.hpp"
#include "sonarcount/census_net.hpp"
#include "sonarcount/scene.hpp"
#include "sonarcount/trainer.hpp"

// Experiment configuration file
// -----------------------------
//
//   file     := { line }
//   line     := blank | comment | section | entry
//   comment  := ('#' | ';') text
//   section  := '[' name ']'
//   entry    := key '=' value
//   value    := scalar | scalar ',' scalar { ',' scalar }
//
// Keys are looked up as "section.key". Every key is optional; unknown keys
// and malformed values are errors. Intervals are written "low, high".

namespace sonarcount {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ExperimentConfig {
  // [dataset]
  std::string bank;
  std::size_t n_images = 25000;
  std::uint64_t root_seed = 0;
  SceneConfig scene;
  // [training]
  TrainConfig training;
  double train_fraction = 0.9;
  // [eval]
  int repeats = 3;
  std::vector<std::size_t> budgets{125, 250, 500, 1000, 2000};
  std::size_t test_images = 200;
  std::uint64_t test_seed = 1;

  ExperimentConfig() {
    training.arch.max_fish = scene.max_fish;
    training.arch.max_dolphin = scene.max_dolphin;
  }

  /// Architecture count maxima always follow the dataset section.
  void sync() {
    training.arch.max_fish = scene.max_fish;
    training.arch.max_dolphin = scene.max_dolphin;
  }

  std::string validate() const {
    if (auto e = scene.validate(); !e.empty()) return "dataset: " + e;
    if (auto e = training.validate(); !e.empty()) return "training: " + e;
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) return "training.train_fraction must lie in (0,1)";
    if (repeats < 1) return "eval.repeats must be >= 1";
    if (test_images < 1) return "eval.test_images must be >= 1";
    for (std::size_t i = 0; i < budgets.size(); ++i) {
      if (budgets[i] < 1) return "eval.budgets must be >= 1";
      if (i > 0 && budgets[i] <= budgets[i - 1]) return "eval.budgets must be strictly increasing";
    }
    return {};
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto t = trim(text);
  const auto* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (ec != std::errc() || ptr != end || t.empty()) {
    throw ConfigError(key + ": cannot parse '" + text + "' as a number");
  }
  return value;
}

// libstdc++ 11 has no floating-point from_chars for every type in use.
template <>
inline double parse_number<double>(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": cannot parse '" + text + "' as a number");
  }
  if (pos != t.size()) throw ConfigError(key + ": cannot parse '" + text + "' as a number");
  return v;
}

inline std::string fmt_double(double v) {
  std::ostringstream o;
  o << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return o.str();
}

struct KeyBinding {
  std::string name;  // section.key
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

inline std::vector<KeyBinding> bindings(ExperimentConfig& c) {
  std::vector<KeyBinding> b;
  auto dbl = [&b](std::string name, double& ref) {
    b.push_back({name, [&ref, name](const std::string& v) { ref = parse_number<double>(name, v); },
                 [&ref] { return fmt_double(ref); }});
  };
  auto integer = [&b](std::string name, int& ref) {
    b.push_back({name, [&ref, name](const std::string& v) { ref = parse_number<int>(name, v); },
                 [&ref] { return std::to_string(ref); }});
  };
  auto size = [&b](std::string name, std::size_t& ref) {
    b.push_back({name, [&ref, name](const std::string& v) { ref = parse_number<std::size_t>(name, v); },
                 [&ref] { return std::to_string(ref); }});
  };
  auto u64 = [&b](std::string name, std::uint64_t& ref) {
    b.push_back({name, [&ref, name](const std::string& v) { ref = parse_number<std::uint64_t>(name, v); },
                 [&ref] { return std::to_string(ref); }});
  };
  auto interval = [&b](std::string name, Interval& ref) {
    b.push_back({name,
                 [&ref, name](const std::string& v) {
                   auto parts = split_list(v);
                   if (parts.size() != 2) throw ConfigError(name + ": expected 'low, high'");
                   ref = {parse_number<double>(name, parts[0]), parse_number<double>(name, parts[1])};
                 },
                 [&ref] { return fmt_double(ref.lo) + ", " + fmt_double(ref.hi); }});
  };

  b.push_back({"dataset.bank", [&c](const std::string& v) { c.bank = trim(v); }, [&c] { return c.bank; }});
  integer("dataset.canvas_width", c.scene.canvas_width);
  integer("dataset.canvas_height", c.scene.canvas_height);
  integer("dataset.max_fish", c.scene.max_fish);
  integer("dataset.max_dolphin", c.scene.max_dolphin);
  size("dataset.n_images", c.n_images);
  u64("dataset.root_seed", c.root_seed);
  interval("dataset.sprite_scale", c.scene.sprite_scale);
  interval("dataset.sprite_rotation_deg", c.scene.sprite_rotation_deg);
  integer("dataset.placement_attempts", c.scene.placement_attempts);

  auto& bg = c.scene.policy.background;
  dbl("background_policy.hflip_p", bg.hflip_p);
  dbl("background_policy.vflip_p", bg.vflip_p);
  interval("background_policy.rotation_deg", bg.rotation_deg);
  interval("background_policy.scale", bg.scale);
  interval("background_policy.translate_frac", bg.translate_frac);
  interval("background_policy.blur_sigma", bg.blur_sigma);

  auto& gl = c.scene.policy.global;
  interval("global_policy.color_delta", gl.color_delta);
  interval("global_policy.brightness", gl.brightness);
  dbl("global_policy.grayscale_p", gl.grayscale_p);
  interval("global_policy.blur_sigma", gl.blur_sigma);
  interval("global_policy.dropout_rate", gl.dropout_rate);
  b.push_back({"global_policy.dropout_block",
               [&gl](const std::string& v) {
                 auto parts = split_list(v);
                 if (parts.size() != 2) throw ConfigError("global_policy.dropout_block: expected 'min, max'");
                 gl.dropout_block_min = parse_number<int>("global_policy.dropout_block", parts[0]);
                 gl.dropout_block_max = parse_number<int>("global_policy.dropout_block", parts[1]);
               },
               [&gl] { return std::to_string(gl.dropout_block_min) + ", " + std::to_string(gl.dropout_block_max); }});

  auto& t = c.training;
  integer("training.epochs", t.epochs);
  integer("training.batch_size", t.batch_size);
  dbl("training.learning_rate", t.adam.learning_rate);
  dbl("training.beta1", t.adam.beta1);
  dbl("training.beta2", t.adam.beta2);
  dbl("training.epsilon", t.adam.epsilon);
  u64("training.seed", t.seed);
  b.push_back({"training.head_mode", [&t](const std::string& v) { t.arch.head_mode = head_mode_from_string(trim(v)); },
               [&t] { return std::string(to_string(t.arch.head_mode)); }});
  integer("training.input_size", t.arch.input_size);
  b.push_back({"training.conv_channels",
               [&t](const std::string& v) {
                 t.arch.conv_channels.clear();
                 for (const auto& p : split_list(v)) t.arch.conv_channels.push_back(parse_number<int>("training.conv_channels", p));
               },
               [&t] {
                 std::string s;
                 for (std::size_t i = 0; i < t.arch.conv_channels.size(); ++i) s += (i ? ", " : "") + std::to_string(t.arch.conv_channels[i]);
                 return s;
               }});
  integer("training.dense_units", t.arch.dense_units);
  dbl("training.train_fraction", c.train_fraction);

  integer("eval.repeats", c.repeats);
  b.push_back({"eval.budgets",
               [&c](const std::string& v) {
                 c.budgets.clear();
                 for (const auto& p : split_list(v)) c.budgets.push_back(parse_number<std::size_t>("eval.budgets", p));
               },
               [&c] {
                 std::string s;
                 for (std::size_t i = 0; i < c.budgets.size(); ++i) s += (i ? ", " : "") + std::to_string(c.budgets[i]);
                 return s;
               }});
  size("eval.test_images", c.test_images);
  u64("eval.test_seed", c.test_seed);
  return b;
}

}  // namespace detail

/// Sets one "section.key" entry.
inline void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  for (auto& b : detail::bindings(c)) {
    if (b.name == key) {
      b.set(value);
      c.sync();
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

/// Applies "section.key=value" overrides.
inline void apply_override(ExperimentConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  set_config_value(c, detail::trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

inline ExperimentConfig parse_config(std::istream& in, const std::string& name = "<config>") {
  ExperimentConfig c;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = name + ":" + std::to_string(lineno) + ": ";
    line = detail::trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "entry outside of a section");
    try {
      set_config_value(c, section + "." + detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const std::exception& e) {
      throw ConfigError(where + e.what());
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, path.string());
}

/// Every key with its effective value, in the config file format. Parsing
/// this text reproduces the configuration exactly.
inline std::string config_to_text(const ExperimentConfig& c) {
  ExperimentConfig copy = c;
  std::string out, section;
  for (auto& b : detail::bindings(copy)) {
    const auto dot = b.name.find('.');
    const auto sec = b.name.substr(0, dot);
    if (sec != section) {
      out += (section.empty() ? "" : "\n") + std::string("[") + sec + "]\n";
      section = sec;
    }
    out += b.name.substr(dot + 1) + " = " + b.get() + "\n";
  }
  return out;
}

}  // namespace sonarcount
