#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sonarcount/census_net.hpp"
#include "sonarcount/seed_stream.hpp"
#include "sonarcount/trainer.hpp"

namespace sonarcount {

struct SpeciesError {
  double mae = 0.0;          // mean |prediction - label| on continuous predictions
  double mae_rounded = 0.0;  // same, predictions rounded half-up first
  double mse = 0.0;
};

struct Residual {
  double fish_prediction = 0.0;
  int fish_label = 0;
  double dolphin_prediction = 0.0;
  int dolphin_label = 0;
};

struct EvalReport {
  SpeciesError fish;
  SpeciesError dolphin;
  std::vector<Residual> residuals;
  std::size_t n_images = 0;
  int n_repeats = 1;
};

inline double round_half_up(double v) { return std::floor(v + 0.5); }

inline EvalReport mean_count_error(const std::vector<CountEstimate>& predictions, const std::vector<CountLabel>& labels) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("mean_count_error: length mismatch");
  if (predictions.empty()) throw std::invalid_argument("mean_count_error: empty input");
  EvalReport r;
  r.n_images = predictions.size();
  auto accumulate = [](SpeciesError& e, double pred, int label) {
    const double d = pred - label;
    e.mae += std::abs(d);
    e.mae_rounded += std::abs(round_half_up(pred) - label);
    e.mse += d * d;
  };
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    accumulate(r.fish, predictions[i].fish, labels[i].fish);
    accumulate(r.dolphin, predictions[i].dolphin, labels[i].dolphin);
    r.residuals.push_back({predictions[i].fish, labels[i].fish, predictions[i].dolphin, labels[i].dolphin});
  }
  const double n = static_cast<double>(predictions.size());
  for (SpeciesError* e : {&r.fish, &r.dolphin}) {
    e->mae /= n;
    e->mae_rounded /= n;
    e->mse /= n;
  }
  return r;
}

/// Any callable mapping a preprocessed image to count estimates.
using Predictor = std::function<CountEstimate(const Raster&)>;

inline EvalReport evaluate(const Predictor& predict, const LabeledSet& test) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  std::vector<CountEstimate> preds;
  preds.reserve(test.count());
  for (std::size_t i = 0; i < test.count(); ++i) preds.push_back(predict(test.image(i)));
  return mean_count_error(preds, test.labels());
}

template <typename T>
EvalReport evaluate(const CensusModel<T>& model, const LabeledSet& test) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  return mean_count_error(predict_set(model, test), test.labels());
}

/// Error of always predicting the training-set mean count.
inline EvalReport mean_baseline(const LabeledSet& train, const LabeledSet& test) {
  double f = 0.0, d = 0.0;
  for (const auto& l : train.labels()) {
    f += l.fish;
    d += l.dolphin;
  }
  const CountEstimate c{f / train.count(), d / train.count()};
  return mean_count_error(std::vector<CountEstimate>(test.count(), c), test.labels());
}

/// Seed used by repeat r of a repeated experiment.
inline std::uint64_t repeat_seed(std::uint64_t root_seed, int repeat) {
  return SeedStream(root_seed, {0x5E, static_cast<std::uint64_t>(repeat)}).next_u64();
}

struct RepeatedReport {
  EvalReport mean;
  std::vector<EvalReport> runs;
};

/// Averages `repeats` independent runs. Errors are arithmetic means of the
/// per-run errors; residuals hold the per-image mean prediction.
inline RepeatedReport average_reports(std::vector<EvalReport> runs) {
  if (runs.empty()) throw std::invalid_argument("average_reports: no runs");
  RepeatedReport out;
  EvalReport& m = out.mean;
  m.n_images = runs.front().n_images;
  m.n_repeats = static_cast<int>(runs.size());
  m.residuals = runs.front().residuals;
  for (auto& res : m.residuals) res.fish_prediction = res.dolphin_prediction = 0.0;
  for (const auto& r : runs) {
    if (r.n_images != m.n_images) throw std::invalid_argument("average_reports: runs differ in test size");
    for (auto [dst, src] : {std::pair{&m.fish, &r.fish}, std::pair{&m.dolphin, &r.dolphin}}) {
      dst->mae += src->mae;
      dst->mae_rounded += src->mae_rounded;
      dst->mse += src->mse;
    }
    for (std::size_t i = 0; i < m.residuals.size(); ++i) {
      m.residuals[i].fish_prediction += r.residuals[i].fish_prediction;
      m.residuals[i].dolphin_prediction += r.residuals[i].dolphin_prediction;
    }
  }
  const double k = static_cast<double>(runs.size());
  for (SpeciesError* e : {&m.fish, &m.dolphin}) {
    e->mae /= k;
    e->mae_rounded /= k;
    e->mse /= k;
  }
  for (auto& res : m.residuals) {
    res.fish_prediction /= k;
    res.dolphin_prediction /= k;
  }
  out.runs = std::move(runs);
  return out;
}

/// Runs run_once(repeat, seed) for each repeat with derived seeds and
/// averages the reports.
inline RepeatedReport evaluate_repeated(const std::function<EvalReport(int, std::uint64_t)>& run_once, int repeats,
                                        std::uint64_t root_seed) {
  if (repeats < 1) throw std::invalid_argument("evaluate_repeated: repeats must be >= 1");
  std::vector<EvalReport> runs;
  for (int r = 0; r < repeats; ++r) runs.push_back(run_once(r, repeat_seed(root_seed, r)));
  return average_reports(std::move(runs));
}

// ---------------------------------------------------------------------------
// Logarithmic regression y = a + b ln x
// ---------------------------------------------------------------------------

struct LogFit {
  double a = 0.0;
  double b = 0.0;
  double r_squared = 1.0;

  double operator()(double x) const { return a + b * std::log(x); }
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline LogFit log_fit(const std::vector<Point>& points) {
  if (points.size() < 2) throw std::invalid_argument("log_fit: need at least 2 points");
  for (const auto& p : points) {
    if (!(p.x > 0.0)) throw std::invalid_argument("log_fit: x values must be > 0");
  }
  const double n = static_cast<double>(points.size());
  double mean_l = 0.0, mean_y = 0.0;
  for (const auto& p : points) {
    mean_l += std::log(p.x);
    mean_y += p.y;
  }
  mean_l /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dl = std::log(p.x) - mean_l, dy = p.y - mean_y;
    sxx += dl * dl;
    sxy += dl * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("log_fit: need at least 2 distinct x values");

  LogFit f;
  const bool constant_y = std::all_of(points.begin(), points.end(), [&](const Point& p) { return p.y == points[0].y; });
  if (constant_y) {
    f.a = points[0].y;
    f.b = 0.0;
    f.r_squared = 1.0;
    return f;
  }
  f.b = sxy / sxx;
  f.a = mean_y - f.b * mean_l;
  double ss_res = 0.0;
  for (const auto& p : points) {
    const double e = p.y - f(p.x);
    ss_res += e * e;
  }
  f.r_squared = syy == 0.0 ? (ss_res == 0.0 ? 1.0 : 0.0) : 1.0 - ss_res / syy;
  return f;
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

inline std::string residuals_csv(const EvalReport& r) {
  std::ostringstream out;
  out << std::setprecision(17) << "image,fish_label,fish_prediction,fish_abs_error,dolphin_label,dolphin_prediction,"
                                  "dolphin_abs_error\n";
  for (std::size_t i = 0; i < r.residuals.size(); ++i) {
    const auto& x = r.residuals[i];
    out << i << "," << x.fish_label << "," << x.fish_prediction << "," << std::abs(x.fish_prediction - x.fish_label)
        << "," << x.dolphin_label << "," << x.dolphin_prediction << ","
        << std::abs(x.dolphin_prediction - x.dolphin_label) << "\n";
  }
  return out.str();
}

inline nlohmann::json to_json(const SpeciesError& e) {
  return {{"mae", e.mae}, {"mae_rounded", e.mae_rounded}, {"mse", e.mse}};
}

inline nlohmann::json summary_json(const EvalReport& r) {
  return {{"dolphin", to_json(r.dolphin)}, {"fish", to_json(r.fish)}, {"n_images", r.n_images},
          {"n_repeats", r.n_repeats}};
}

}  // namespace sonarcount
