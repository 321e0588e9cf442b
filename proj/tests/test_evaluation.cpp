#include <cmath>
#include <numbers>

#include "test_support.hpp"

using namespace sonarcount;

namespace {

// Solves the 2x2 normal equations [n, sum l; sum l, sum l^2][a; b] = [sum y; sum l y]
// by Cramer's rule.
std::pair<double, double> normal_equations(const std::vector<Point>& pts) {
  double n = 0, sl = 0, sll = 0, sy = 0, sly = 0;
  for (const auto& p : pts) {
    const double l = std::log(p.x);
    n += 1;
    sl += l;
    sll += l * l;
    sy += p.y;
    sly += l * p.y;
  }
  const double det = n * sll - sl * sl;
  return {(sy * sll - sl * sly) / det, (n * sly - sl * sy) / det};
}

std::vector<CountLabel> labels_of(const std::vector<std::pair<int, int>>& v) {
  std::vector<CountLabel> out;
  for (auto [f, d] : v) out.push_back({f, d});
  return out;
}

}  // namespace

TEST(MeanCountError, PerfectPredictionsGiveZero) {
  const auto labels = labels_of({{3, 1}, {0, 0}, {34, 3}});
  std::vector<CountEstimate> preds;
  for (const auto& l : labels) preds.push_back({double(l.fish), double(l.dolphin)});
  const auto r = mean_count_error(preds, labels);
  EXPECT_EQ(r.fish.mae, 0.0);
  EXPECT_EQ(r.dolphin.mae, 0.0);
  EXPECT_EQ(r.fish.mae_rounded, 0.0);
  EXPECT_EQ(r.fish.mse, 0.0);
  EXPECT_EQ(r.residuals.size(), 3u);
  EXPECT_EQ(r.n_images, 3u);
}

TEST(MeanCountError, HandArithmetic) {
  const auto r = mean_count_error({{2, 0}, {4, 0}}, labels_of({{1, 0}, {6, 0}}));
  EXPECT_DOUBLE_EQ(r.fish.mae, 1.5);
  EXPECT_DOUBLE_EQ(r.fish.mse, 2.5);
}

TEST(MeanCountError, RoundedVariantUsesHalfUp) {
  // 2.5 rounds to 3, 0.49 to 0, 1.5 to 2.
  const auto r = mean_count_error({{2.5, 0.49}, {1.5, 1.5}}, labels_of({{2, 0}, {2, 1}}));
  EXPECT_DOUBLE_EQ(r.fish.mae_rounded, (1.0 + 0.0) / 2);
  EXPECT_DOUBLE_EQ(r.dolphin.mae_rounded, (0.0 + 1.0) / 2);
  EXPECT_DOUBLE_EQ(r.fish.mae, 0.5);
  EXPECT_EQ(round_half_up(-0.5), 0.0);
}

TEST(MeanCountError, PermutationInvariant) {
  SeedStream s(1, {});
  std::vector<CountEstimate> preds;
  std::vector<CountLabel> labels;
  for (int i = 0; i < 50; ++i) {
    preds.push_back({s.uniform(0, 34), s.uniform(0, 3)});
    labels.push_back({static_cast<int>(s.uniform_int(0, 35)), static_cast<int>(s.uniform_int(0, 4))});
  }
  const auto a = mean_count_error(preds, labels);
  std::vector<std::size_t> perm(50);
  for (std::size_t i = 0; i < 50; ++i) perm[i] = i;
  shuffle(perm, s);
  std::vector<CountEstimate> p2;
  std::vector<CountLabel> l2;
  for (auto i : perm) {
    p2.push_back(preds[i]);
    l2.push_back(labels[i]);
  }
  const auto b = mean_count_error(p2, l2);
  EXPECT_NEAR(a.fish.mae, b.fish.mae, 1e-12);
  EXPECT_NEAR(a.dolphin.mae, b.dolphin.mae, 1e-12);
  EXPECT_NEAR(a.fish.mse, b.fish.mse, 1e-12);
}

TEST(MeanCountError, RejectsBadInput) {
  EXPECT_THROW(mean_count_error({}, {}), std::invalid_argument);
  EXPECT_THROW(mean_count_error({{1, 1}}, labels_of({{1, 1}, {2, 2}})), std::invalid_argument);
}

TEST(Evaluate, PerfectOracleStubScoresZero) {
  LabeledSet test(4);
  // Encode the label in the pixel value so a stub can read it back.
  for (int i = 0; i < 10; ++i) test.add(Raster(4, 4, 3, static_cast<float>(i) / 10.0f), {i, i % 4});
  const Predictor oracle_model = [](const Raster& img) {
    const int i = static_cast<int>(std::lround(img.at(0, 0) * 10.0f));
    return CountEstimate{double(i), double(i % 4)};
  };
  const auto r = evaluate(oracle_model, test);
  EXPECT_EQ(r.fish.mae, 0.0);
  EXPECT_EQ(r.dolphin.mae, 0.0);
  EXPECT_THROW(evaluate(oracle_model, LabeledSet(4)), std::invalid_argument);
}

TEST(Evaluate, SingleRepeatEqualsSingleEvaluation) {
  const auto one = mean_count_error({{2, 1}, {5, 0}}, labels_of({{1, 1}, {6, 2}}));
  const auto rep = evaluate_repeated([&](int, std::uint64_t) { return one; }, 1, 9);
  EXPECT_EQ(rep.mean.fish.mae, one.fish.mae);
  EXPECT_EQ(rep.mean.dolphin.mse, one.dolphin.mse);
  EXPECT_EQ(rep.mean.n_repeats, 1);
}

TEST(Evaluate, EqualRepeatsAverageToSingleRun) {
  const auto one = mean_count_error({{2.2, 1.4}, {5.1, 0.3}}, labels_of({{1, 1}, {6, 2}}));
  const auto rep = evaluate_repeated([&](int, std::uint64_t) { return one; }, 3, 9);
  EXPECT_NEAR(rep.mean.fish.mae, one.fish.mae, 1e-15);
  EXPECT_NEAR(rep.mean.dolphin.mae, one.dolphin.mae, 1e-15);
  EXPECT_EQ(rep.mean.n_repeats, 3);
  EXPECT_EQ(rep.runs.size(), 3u);
}

TEST(Evaluate, RepeatsUseDistinctDerivedSeeds) {
  std::vector<std::uint64_t> seeds;
  evaluate_repeated(
      [&](int, std::uint64_t seed) {
        seeds.push_back(seed);
        return mean_count_error({{0, 0}}, labels_of({{0, 0}}));
      },
      3, 4);
  ASSERT_EQ(seeds.size(), 3u);
  EXPECT_NE(seeds[0], seeds[1]);
  EXPECT_NE(seeds[1], seeds[2]);
  EXPECT_EQ(seeds[0], repeat_seed(4, 0));
}

TEST(Evaluate, RepeatedDeskCycleAveragesPerRunReports) {
  const SpriteBank bank = synthetic::make_bank(synthetic::SourceSpec{}, 2);
  SceneConfig scene;
  scene.canvas_width = scene.canvas_height = 32;
  scene.max_fish = 3;
  scene.max_dolphin = 1;
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 8;
  tc.arch.input_size = 16;
  tc.arch.conv_channels = {4};
  tc.arch.dense_units = 8;
  tc.arch.max_fish = 3;
  tc.arch.max_dolphin = 1;
  const auto test = LabeledSet::from_scenes(simulate_scenes(bank, 10, 77, scene), 16);
  const auto rep = evaluate_repeated(
      [&](int, std::uint64_t seed) { return run_cycle(bank, scene, tc, 20, 0.9, test, seed).report; }, 3, 5);
  ASSERT_EQ(rep.runs.size(), 3u);
  double f = 0.0, d = 0.0;
  for (const auto& r : rep.runs) {
    f += r.fish.mae;
    d += r.dolphin.mae;
  }
  EXPECT_NEAR(rep.mean.fish.mae, f / 3.0, 1e-12);
  EXPECT_NEAR(rep.mean.dolphin.mae, d / 3.0, 1e-12);
  EXPECT_EQ(rep.mean.residuals.size(), 10u);
  EXPECT_EQ(rep.mean.n_repeats, 3);
}

TEST(MeanBaseline, PredictsTrainingMean) {
  LabeledSet train(2), test(2);
  train.add(Raster(2, 2, 3), {2, 0});
  train.add(Raster(2, 2, 3), {4, 2});
  test.add(Raster(2, 2, 3), {1, 1});
  const auto r = mean_baseline(train, test);
  EXPECT_DOUBLE_EQ(r.fish.mae, 2.0);
  EXPECT_DOUBLE_EQ(r.dolphin.mae, 0.0);
}

// --- log_fit ----------------------------------------------------------------

TEST(LogFit, ExactLogarithmicData) {
  const double e = std::numbers::e;
  const auto f = log_fit({{1, 0}, {e, 1}, {e * e, 2}});
  EXPECT_NEAR(f.a, 0.0, 1e-9);
  EXPECT_NEAR(f.b, 1.0, 1e-9);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-9);
}

TEST(LogFit, ConstantDataIsDegenerate) {
  const auto f = log_fit({{10, 0.4}, {20, 0.4}, {40, 0.4}});
  EXPECT_EQ(f.b, 0.0);
  EXPECT_EQ(f.a, 0.4);
  EXPECT_EQ(f.r_squared, 1.0);
}

TEST(LogFit, MatchesNormalEquationsOnRandomData) {
  SeedStream s(3, {});
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Point> pts;
    for (int i = 0; i < 50; ++i) pts.push_back({s.uniform(1, 5000), s.uniform(-2, 3)});
    const auto f = log_fit(pts);
    const auto [a, b] = normal_equations(pts);
    EXPECT_NEAR(f.a, a, 1e-9);
    EXPECT_NEAR(f.b, b, 1e-9);
    EXPECT_LE(f.r_squared, 1.0);
  }
}

TEST(LogFit, ResidualsOrthogonalToDesign) {
  SeedStream s(4, {});
  std::vector<Point> pts;
  for (int i = 0; i < 40; ++i) pts.push_back({s.uniform(1, 100), s.uniform(0, 1)});
  const auto f = log_fit(pts);
  double r1 = 0.0, rl = 0.0;
  for (const auto& p : pts) {
    const double res = p.y - f(p.x);
    r1 += res;
    rl += res * std::log(p.x);
  }
  EXPECT_NEAR(r1, 0.0, 1e-8);
  EXPECT_NEAR(rl, 0.0, 1e-8);
}

TEST(LogFit, FittedValuesHaveUnitRSquared) {
  const auto f = log_fit({{125, 0.9}, {250, 0.7}, {500, 0.65}, {1000, 0.5}, {2000, 0.45}});
  std::vector<Point> fitted;
  for (double x : {125.0, 250.0, 500.0, 1000.0, 2000.0}) fitted.push_back({x, f(x)});
  EXPECT_NEAR(log_fit(fitted).r_squared, 1.0, 1e-12);
}

TEST(LogFit, DuplicateXIsOrdinaryLeastSquares) {
  const auto f = log_fit({{1, 0}, {1, 2}, {std::numbers::e, 3}});
  EXPECT_NEAR(f.a, 1.0, 1e-12);
  EXPECT_NEAR(f.b, 2.0, 1e-12);
  EXPECT_LT(f.r_squared, 1.0);
}

TEST(LogFit, RejectsBadInput) {
  EXPECT_THROW(log_fit({{1, 1}}), std::invalid_argument);
  EXPECT_THROW(log_fit({{0, 1}, {2, 1}}), std::invalid_argument);
  EXPECT_THROW(log_fit({{3, 1}, {3, 2}}), std::invalid_argument);
}

// --- sweep ------------------------------------------------------------------

TEST(Sweep, SingleBudgetHasNoFitAndIsDeterministic) {
  const SpriteBank bank = synthetic::make_bank(synthetic::SourceSpec{}, 2);
  SceneConfig scene;
  scene.canvas_width = scene.canvas_height = 32;
  scene.max_fish = 3;
  scene.max_dolphin = 1;
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 8;
  tc.arch.input_size = 16;
  tc.arch.conv_channels = {4};
  tc.arch.dense_units = 8;
  tc.arch.max_fish = 3;
  tc.arch.max_dolphin = 1;
  const auto test = LabeledSet::from_scenes(simulate_scenes(bank, 6, 70, scene), 16);
  const auto one = sweep(bank, scene, tc, {20}, 0.9, test, 1);
  EXPECT_EQ(one.points.size(), 1u);
  EXPECT_FALSE(one.fish_fit.has_value());
  EXPECT_TRUE(sweep_json(one)["fish_fit"].is_null());

  const auto a = sweep(bank, scene, tc, {10, 20, 40}, 0.9, test, 1);
  const auto b = sweep(bank, scene, tc, {10, 20, 40}, 0.9, test, 1);
  EXPECT_EQ(sweep_json(a).dump(), sweep_json(b).dump());
  ASSERT_TRUE(a.dolphin_fit.has_value());
  const auto svg = sweep_svg(a, Species::dolphin);
  std::size_t circles = 0;
  for (auto pos = svg.find("<circle class=\"point\""); pos != std::string::npos;
       pos = svg.find("<circle class=\"point\"", pos + 1))
    ++circles;
  EXPECT_EQ(circles, 3u);
  const auto csv = sweep_csv(a);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);

  EXPECT_THROW(sweep(bank, scene, tc, {20, 10}, 0.9, test, 1), std::invalid_argument);
  try {
    sweep(bank, scene, tc, {1}, 0.9, test, 1);  // one image cannot be split
    FAIL() << "expected SweepError";
  } catch (const SweepError& e) {
    EXPECT_EQ(e.budget(), 1u);
  }
}

// --- reports ----------------------------------------------------------------

TEST(Table, ReferenceLayoutCarriesReferenceRows) {
  const auto text = render_table(reference_table());
  EXPECT_NE(text.find("Regression Mean Error"), std::string::npos);
  EXPECT_NE(text.find("Classification Mean Error"), std::string::npos);
  for (const char* needle : {"DenseNet201", "InceptionResNetV2", "Xception", "MobileNetV2", "2.11", "2.55", "2.514",
                             "2.07", "2.27", "2.31", "2.87", "2.58", "0.225", "0.373", "0.204", "0.415", "0.133",
                             "0.32", "0.303", "0.246"}) {
    EXPECT_NE(text.find(needle), std::string::npos) << needle;
  }
  const auto rows = reference_table();
  EXPECT_DOUBLE_EQ(rows[0].regression_error, 2.11);
  EXPECT_DOUBLE_EQ(rows[6].regression_error, 0.133);
}

TEST(Reports, ResidualCsvAndSummaryJson) {
  const auto r = mean_count_error({{2, 1}, {5, 0}}, labels_of({{1, 1}, {6, 2}}));
  const auto csv = residuals_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  const auto j = summary_json(r);
  EXPECT_DOUBLE_EQ(j["fish"]["mae"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j["dolphin"]["mae"].get<double>(), 1.0);
  EXPECT_EQ(j["n_images"].get<int>(), 2);
}
