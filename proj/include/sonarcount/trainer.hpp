#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sonarcount/adam.hpp"
#include "sonarcount/census_net.hpp"
#include "sonarcount/dataset.hpp"
#include "sonarcount/png_io.hpp"

namespace sonarcount {

/// Preprocessed images (S x S x 3 floats each) with their count labels.
class LabeledSet {
 public:
  explicit LabeledSet(int input_size = 0) : size_(input_size) {}

  int input_size() const { return size_; }
  std::size_t count() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  const std::vector<CountLabel>& labels() const { return labels_; }

  void add(const Raster& image, CountLabel label) {
    const Raster p = preprocess(image, size_);
    pixels_.insert(pixels_.end(), p.pixels().begin(), p.pixels().end());
    labels_.push_back(label);
  }

  Raster image(std::size_t i) const {
    const std::size_t n = stride();
    return Raster(size_, size_, 3, std::vector<float>(pixels_.begin() + static_cast<std::ptrdiff_t>(i * n),
                                                      pixels_.begin() + static_cast<std::ptrdiff_t>((i + 1) * n)));
  }

  template <typename T>
  Tensor<T> batch(const std::vector<std::size_t>& idx) const {
    const auto s = static_cast<std::size_t>(size_);
    Tensor<T> out(Shape{idx.size(), s, s, 3});
    const std::size_t n = stride();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      std::copy_n(pixels_.begin() + static_cast<std::ptrdiff_t>(idx[k] * n), n,
                  out.values.begin() + static_cast<std::ptrdiff_t>(k * n));
    }
    return out;
  }

  std::vector<CountLabel> batch_labels(const std::vector<std::size_t>& idx) const {
    std::vector<CountLabel> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(labels_[i]);
    return out;
  }

  static LabeledSet from_scenes(const std::vector<Scene>& scenes, int input_size) {
    LabeledSet set(input_size);
    for (const auto& s : scenes) set.add(s.image, {s.record.fish_count, s.record.dolphin_count});
    return set;
  }

  static LabeledSet from_manifest(const DatasetManifest& m, const std::filesystem::path& dir, int input_size) {
    LabeledSet set(input_size);
    for (const auto& r : m.records) set.add(load_raster(dir / r.file), {r.fish_count, r.dolphin_count});
    return set;
  }

 private:
  std::size_t stride() const { return static_cast<std::size_t>(size_) * size_ * 3; }

  int size_;
  std::vector<float> pixels_;
  std::vector<CountLabel> labels_;
};

struct TrainConfig {
  int epochs = 150;
  int batch_size = 32;
  AdamConfig adam;
  std::uint64_t seed = 0;
  Architecture arch;

  std::string validate() const {
    if (epochs < 0) return "epochs must be >= 0";
    if (batch_size < 1) return "batch size must be >= 1";
    if (auto e = adam.validate(); !e.empty()) return e;
    return arch.validate();
  }
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

/// Row 0 holds the losses of the initialization; rows 1..epochs follow
/// training. Training loss is the running mean over the epoch's batches.
struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;

  std::string to_csv() const {
    std::ostringstream out;
    out << "epoch,train_loss,val_loss\n" << std::setprecision(17);
    for (const auto& e : epochs) out << e.epoch << "," << e.train_loss << "," << e.val_loss << "\n";
    return out.str();
  }
};

class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

template <typename T>
struct TrainResult {
  CensusModel<T> model;
  TrainHistory history;
};

/// Mean loss over a whole set, evaluated in chunks.
template <typename T>
double mean_loss(const CensusModel<T>& model, const LabeledSet& set, int chunk = 64) {
  if (set.empty()) throw std::invalid_argument("mean_loss: empty set");
  double total = 0.0;
  for (std::size_t start = 0; start < set.count(); start += static_cast<std::size_t>(chunk)) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(set.count(), start + static_cast<std::size_t>(chunk)); ++i) idx.push_back(i);
    total += static_cast<double>(model.loss(set.batch<T>(idx), set.batch_labels(idx)).total()) * idx.size();
  }
  return total / static_cast<double>(set.count());
}

template <typename T>
std::vector<CountEstimate> predict_set(const CensusModel<T>& model, const LabeledSet& set, int chunk = 64) {
  std::vector<CountEstimate> out;
  for (std::size_t start = 0; start < set.count(); start += static_cast<std::size_t>(chunk)) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(set.count(), start + static_cast<std::size_t>(chunk)); ++i) idx.push_back(i);
    auto est = model.estimates(model.forward(set.batch<T>(idx)));
    out.insert(out.end(), est.begin(), est.end());
  }
  return out;
}

inline SeedStream init_stream(std::uint64_t seed) { return SeedStream(seed, {1}); }

/// Adam over shuffled mini-batches; returns the parameters of the epoch with
/// the lowest validation loss (the initialization when epochs == 0).
template <typename T = float>
TrainResult<T> train(const LabeledSet& train_set, const LabeledSet& val_set, const TrainConfig& cfg,
                     const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  if (auto err = cfg.validate(); !err.empty()) throw std::invalid_argument("train config: " + err);
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (val_set.empty()) throw std::invalid_argument("train: empty validation set");
  if (train_set.input_size() != cfg.arch.input_size || val_set.input_size() != cfg.arch.input_size) {
    throw std::invalid_argument("train: dataset input size does not match the architecture");
  }

  auto model = CensusModel<T>::initialized(cfg.arch, init_stream(cfg.seed));
  TrainResult<T> result{model, {}};
  auto check = [](double v, const std::string& where) {
    if (!std::isfinite(v)) throw TrainingError("non-finite loss " + where);
  };
  EpochRecord first{0, mean_loss(model, train_set), mean_loss(model, val_set)};
  check(first.train_loss, "at initialization");
  result.history.epochs.push_back(first);
  if (on_epoch) on_epoch(first);
  double best = first.val_loss;

  AdamState<T> state = AdamState<T>::zeros_like(model.parameters());
  std::vector<std::size_t> order(train_set.count());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    SeedStream shuffle_stream(cfg.seed, {2, static_cast<std::uint64_t>(epoch)});
    shuffle(order, shuffle_stream);
    double running = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
      auto g = model.backward(train_set.batch<T>(idx), train_set.batch_labels(idx));
      const double l = static_cast<double>(g.loss.total());
      check(l, "at epoch " + std::to_string(epoch) + ", batch starting at " + std::to_string(start));
      running += l * static_cast<double>(idx.size());
      adam_step(model.parameters(), g.grads, state, cfg.adam);
    }
    EpochRecord rec{epoch, running / static_cast<double>(order.size()), mean_loss(model, val_set)};
    check(rec.val_loss, "on validation at epoch " + std::to_string(epoch));
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (epoch == 1 || rec.val_loss < best) {
      best = rec.val_loss;
      result.history.best_epoch = epoch;
      result.model = model;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints: "SCCKPT01" magic, u32 header length, JSON header (architecture
// and tensor shapes), then raw little-endian float32 tensors in layout order.
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[8] = {'S', 'C', 'C', 'K', 'P', 'T', '0', '1'};
inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json to_json(const Architecture& a) {
  return {{"conv_channels", a.conv_channels}, {"dense_units", a.dense_units},
          {"head_mode", to_string(a.head_mode)}, {"input_size", a.input_size},
          {"max_dolphin", a.max_dolphin},        {"max_fish", a.max_fish}};
}

inline Architecture architecture_from_json(const nlohmann::json& j) {
  Architecture a;
  a.conv_channels = j.at("conv_channels").get<std::vector<int>>();
  a.dense_units = j.at("dense_units").get<int>();
  a.head_mode = head_mode_from_string(j.at("head_mode").get<std::string>());
  a.input_size = j.at("input_size").get<int>();
  a.max_dolphin = j.at("max_dolphin").get<int>();
  a.max_fish = j.at("max_fish").get<int>();
  return a;
}

inline std::string checkpoint_bytes(const CensusModel<float>& model) {
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& p : model.parameters()) shapes.push_back(p.shape);
  const std::string header =
      nlohmann::json{{"architecture", to_json(model.architecture())}, {"shapes", shapes}, {"version", kCheckpointVersion}}
          .dump();
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  const auto len = static_cast<std::uint32_t>(header.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((len >> (8 * i)) & 0xFF));
  out += header;
  for (const auto& p : model.parameters()) {
    for (float v : p.values) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }
  }
  return out;
}

inline CensusModel<float> checkpoint_from_bytes(const std::string& bytes) {
  auto fail = [](const std::string& why) { return std::runtime_error("invalid checkpoint: " + why); };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) throw fail("bad magic");
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  if (bytes.size() < 12 + static_cast<std::size_t>(len)) throw fail("truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(12, len));
  } catch (const nlohmann::json::exception& e) {
    throw fail(e.what());
  }
  if (header.value("version", 0) != kCheckpointVersion) throw fail("unsupported version");
  CensusModel<float> model(architecture_from_json(header.at("architecture")));
  const auto shapes = header.at("shapes").get<std::vector<Shape>>();
  if (shapes.size() != model.parameters().size()) throw fail("tensor count mismatch");
  std::size_t off = 12 + len;
  for (std::size_t t = 0; t < shapes.size(); ++t) {
    auto& p = model.parameters()[t];
    if (shapes[t] != p.shape) throw fail("shape mismatch at tensor " + std::to_string(t));
    if (bytes.size() < off + 4 * p.size()) throw fail("truncated tensor data");
    for (auto& v : p.values) {
      std::uint32_t bits = 0;
      for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + i])) << (8 * i);
      std::memcpy(&v, &bits, 4);
      off += 4;
    }
  }
  if (off != bytes.size()) throw fail("trailing bytes");
  return model;
}

inline void save_checkpoint(const CensusModel<float>& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  const auto bytes = checkpoint_bytes(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline CensusModel<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return checkpoint_from_bytes(bytes);
}

}  // namespace sonarcount
