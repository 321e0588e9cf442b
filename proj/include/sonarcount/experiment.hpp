#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sonarcount/dataset.hpp"
#include "sonarcount/evaluation.hpp"
#include "sonarcount/trainer.hpp"

namespace sonarcount {

/// Seeds for the pieces of one simulate -> train -> evaluate cycle.
struct CycleSeeds {
  std::uint64_t data = 0;
  std::uint64_t train = 0;

  static CycleSeeds derive(std::uint64_t seed) {
    SeedStream s(seed, {0xC7});
    CycleSeeds out;
    out.data = s.next_u64();
    out.train = s.next_u64();
    return out;
  }
};

struct CycleResult {
  EvalReport report;
  TrainHistory history;
  CensusModel<float> model;
};

/// Simulates n_images scenes, splits them train/validation, trains from
/// scratch and evaluates on `test`.
inline CycleResult run_cycle(const SpriteBank& bank, const SceneConfig& scene_cfg, TrainConfig train_cfg,
                             std::size_t n_images, double train_fraction, const LabeledSet& test,
                             std::uint64_t seed, int workers = 1,
                             const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  const auto seeds = CycleSeeds::derive(seed);
  DatasetManifest m;
  m.root_seed = seeds.data;
  m.config = scene_cfg;
  auto scenes = simulate_scenes(bank, n_images, seeds.data, scene_cfg, workers);
  for (const auto& s : scenes) m.records.push_back(s.record);
  const auto [train_m, val_m] = split_dataset(m, train_fraction);
  if (train_m.records.empty() || val_m.records.empty()) {
    throw std::invalid_argument(std::to_string(n_images) + " images leave an empty training or validation split");
  }
  auto pick = [&](const DatasetManifest& part) {
    LabeledSet set(train_cfg.arch.input_size);
    for (const auto& r : part.records) {
      const auto& s = scenes[static_cast<std::size_t>(r.id)];
      set.add(s.image, {s.record.fish_count, s.record.dolphin_count});
    }
    return set;
  };
  const LabeledSet train_set = pick(train_m), val_set = pick(val_m);
  train_cfg.seed = seeds.train;
  auto trained = train<float>(train_set, val_set, train_cfg, on_epoch);
  return {evaluate(trained.model, test), std::move(trained.history), std::move(trained.model)};
}

// ---------------------------------------------------------------------------
// Synthetic-data budget sweep
// ---------------------------------------------------------------------------

struct SweepPoint {
  std::size_t budget = 0;
  SpeciesError fish;
  SpeciesError dolphin;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::optional<LogFit> fish_fit;
  std::optional<LogFit> dolphin_fit;
};

class SweepError : public std::runtime_error {
 public:
  SweepError(std::size_t budget, const std::string& what)
      : std::runtime_error("budget " + std::to_string(budget) + ": " + what), budget_(budget) {}
  std::size_t budget() const { return budget_; }

 private:
  std::size_t budget_;
};

/// Fits y = a + b ln(budget) to the mean absolute error of each species;
/// fits stay empty with fewer than two points.
inline void fit_sweep(SweepResult& r) {
  std::sort(r.points.begin(), r.points.end(), [](const auto& a, const auto& b) { return a.budget < b.budget; });
  if (r.points.size() < 2) return;
  std::vector<Point> fish, dolphin;
  for (const auto& p : r.points) {
    fish.push_back({static_cast<double>(p.budget), p.fish.mae});
    dolphin.push_back({static_cast<double>(p.budget), p.dolphin.mae});
  }
  r.fish_fit = log_fit(fish);
  r.dolphin_fit = log_fit(dolphin);
}

/// Budget i trains on its own simulated set (seed derived from root_seed and
/// the budget) and is scored on the same held-out `test` set.
inline SweepResult sweep(const SpriteBank& bank, const SceneConfig& scene_cfg, const TrainConfig& train_cfg,
                         const std::vector<std::size_t>& budgets, double train_fraction, const LabeledSet& test,
                         std::uint64_t root_seed, int workers = 1,
                         const std::function<void(const SweepPoint&)>& on_point = {}) {
  if (budgets.empty()) throw std::invalid_argument("sweep: no budgets");
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] < 1) throw SweepError(budgets[i], "budgets must be >= 1");
    if (i > 0 && budgets[i] <= budgets[i - 1]) throw std::invalid_argument("sweep: budgets must be strictly increasing");
  }
  SweepResult result;
  for (auto budget : budgets) {
    const auto seed = SeedStream(root_seed, {0x5A, budget}).next_u64();
    try {
      auto cycle = run_cycle(bank, scene_cfg, train_cfg, budget, train_fraction, test, seed, workers);
      SweepPoint p{budget, cycle.report.fish, cycle.report.dolphin};
      result.points.push_back(p);
      if (on_point) on_point(p);
    } catch (const SweepError&) {
      throw;
    } catch (const std::exception& e) {
      throw SweepError(budget, e.what());
    }
  }
  fit_sweep(result);
  return result;
}

inline std::string sweep_csv(const SweepResult& r) {
  std::ostringstream out;
  out << std::setprecision(17)
      << "budget,fish_mae,fish_mae_rounded,fish_mse,dolphin_mae,dolphin_mae_rounded,dolphin_mse\n";
  for (const auto& p : r.points) {
    out << p.budget << "," << p.fish.mae << "," << p.fish.mae_rounded << "," << p.fish.mse << "," << p.dolphin.mae
        << "," << p.dolphin.mae_rounded << "," << p.dolphin.mse << "\n";
  }
  return out.str();
}

inline nlohmann::json sweep_json(const SweepResult& r) {
  auto fit = [](const std::optional<LogFit>& f) -> nlohmann::json {
    if (!f) return nullptr;
    return {{"a", f->a}, {"b", f->b}, {"r_squared", f->r_squared}};
  };
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : r.points) {
    points.push_back({{"budget", p.budget}, {"dolphin", to_json(p.dolphin)}, {"fish", to_json(p.fish)}});
  }
  return {{"dolphin_fit", fit(r.dolphin_fit)}, {"fish_fit", fit(r.fish_fit)}, {"points", std::move(points)}};
}

/// Error-versus-budget scatter with the fitted logarithmic curve. One
/// <circle class="point"> per budget.
inline std::string sweep_svg(const SweepResult& r, Species species) {
  const double W = 640, H = 420, left = 70, right = 20, top = 40, bottom = 60;
  const bool fish = species == Species::fish;
  const auto& fit = fish ? r.fish_fit : r.dolphin_fit;
  std::vector<Point> pts;
  for (const auto& p : r.points) pts.push_back({static_cast<double>(p.budget), fish ? p.fish.mae : p.dolphin.mae});

  double xmax = 1, ymax = 0;
  for (const auto& p : pts) {
    xmax = std::max(xmax, p.x);
    ymax = std::max(ymax, p.y);
  }
  double xmin = pts.empty() ? 0.0 : pts.front().x;
  for (const auto& p : pts) xmin = std::min(xmin, p.x);
  if (fit) {
    for (int i = 0; i <= 100; ++i) ymax = std::max(ymax, (*fit)(xmin + (xmax - xmin) * i / 100.0));
  }
  ymax = ymax > 0 ? ymax * 1.1 : 1.0;
  auto sx = [&](double x) { return left + (W - left - right) * x / (xmax * 1.05); };
  auto sy = [&](double y) { return H - bottom - (H - top - bottom) * std::clamp(y, 0.0, ymax) / ymax; };

  std::ostringstream o;
  o << std::fixed << std::setprecision(2);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << " " << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
    << (fish ? "Fish" : "Dolphin") << " mean count error vs. number of synthetic images</text>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = ymax * i / 4.0;
    o << "<text x=\"" << left - 8 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
      << "font-size=\"11\">" << std::setprecision(3) << yv << std::setprecision(2) << "</text>\n";
  }
  for (const auto& p : pts) {
    o << "<text x=\"" << sx(p.x) << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"11\">" << static_cast<long long>(p.x) << "</text>\n";
  }
  o << "<text x=\"" << W / 2 << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"12\">synthetic training images</text>\n";
  if (fit && !pts.empty()) {
    o << "<polyline class=\"fit\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"";
    for (int i = 0; i <= 100; ++i) {
      const double x = xmin + (xmax - xmin) * i / 100.0;
      o << (i ? " " : "") << sx(x) << "," << sy((*fit)(x));
    }
    o << "\"/>\n";
    o << "<text x=\"" << W - right - 10 << "\" y=\"" << top + 14 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
      << "font-size=\"12\">y = " << std::setprecision(4) << fit->a << (fit->b < 0 ? " - " : " + ") << std::abs(fit->b)
      << " ln x, R&#178; = " << fit->r_squared << std::setprecision(2) << "</text>\n";
  }
  for (const auto& p : pts) {
    o << "<circle class=\"point\" cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y) << "\" r=\"4\" fill=\"#2c3e50\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Regression vs classification comparison table
// ---------------------------------------------------------------------------

struct TableRow {
  std::string animal;
  std::string model;
  double regression_error = 0.0;
  double classification_error = 0.0;
};

/// Reference mean count errors on the 123 real test images, full-scale
/// backbones, 25,000 synthetic training images.
inline std::vector<TableRow> reference_table() {
  return {
      {"Fish", "DenseNet201", 2.11, 2.55},       {"Fish", "InceptionResNetV2", 2.514, 2.07},
      {"Fish", "Xception", 2.27, 2.31},          {"Fish", "MobileNetV2", 2.87, 2.58},
      {"Dolphin", "DenseNet201", 0.225, 0.373},  {"Dolphin", "InceptionResNetV2", 0.204, 0.415},
      {"Dolphin", "Xception", 0.133, 0.320},     {"Dolphin", "MobileNetV2", 0.303, 0.246},
  };
}

inline std::string format_error(double v) {
  std::ostringstream o;
  o << std::setprecision(4) << v;
  std::string s = o.str();
  if (s.find('.') == std::string::npos) s += ".0";
  return s;
}

/// Plain-text table: Animal | Model | Regression Mean Error | Classification
/// Mean Error, with the animal name printed once per group.
inline std::string render_table(const std::vector<TableRow>& rows) {
  std::size_t wa = 7, wm = 5;
  for (const auto& r : rows) {
    wa = std::max(wa, r.animal.size());
    wm = std::max(wm, r.model.size());
  }
  const std::string h3 = "Regression Mean Error", h4 = "Classification Mean Error";
  std::ostringstream o;
  auto line = [&](const std::string& a, const std::string& m, const std::string& r, const std::string& c) {
    o << std::left << std::setw(static_cast<int>(wa)) << a << "  " << std::setw(static_cast<int>(wm)) << m << "  "
      << std::right << std::setw(static_cast<int>(h3.size())) << r << "  " << std::setw(static_cast<int>(h4.size()))
      << c << "\n";
  };
  const std::string rule(wa + wm + h3.size() + h4.size() + 6, '-');
  o << rule << "\n";
  line("Animal", "Model", h3, h4);
  o << rule << "\n";
  std::string prev;
  for (const auto& r : rows) {
    if (!prev.empty() && r.animal != prev) o << rule << "\n";
    line(r.animal == prev ? "" : r.animal, r.model, format_error(r.regression_error),
         format_error(r.classification_error));
    prev = r.animal;
  }
  o << rule << "\n";
  return o.str();
}

}  // namespace sonarcount
