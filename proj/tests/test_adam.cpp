#include "test_support.hpp"

using namespace sonarcount;

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  std::vector<Tensor<double>> p{Tensor<double>(Shape{3}, std::vector<double>{0.5, -1.0, 2.0})};
  const auto before = p;
  AdamState<double> s;
  for (int i = 0; i < 5; ++i) adam_step(p, {Tensor<double>(Shape{3})}, s, AdamConfig{});
  EXPECT_EQ(p, before);
  EXPECT_EQ(s.t, 5);
}

TEST(Adam, FirstStepWithUnitGradient) {
  std::vector<Tensor<double>> p{Tensor<double>(Shape{1})};
  AdamState<double> s;
  adam_step(p, {Tensor<double>(Shape{1}, 1.0)}, s, AdamConfig{});
  // m_hat = v_hat = 1, so the step is lr / (1 + eps).
  EXPECT_NEAR(p[0][0], -0.001 / (1.0 + 1e-8), 1e-18);
  EXPECT_NEAR(p[0][0], -0.001, 1e-10);
}

TEST(Adam, TenUnitGradientStepsMatchTable) {
  // With g = 1 every step, m_t = 1 - b1^t and v_t = 1 - b2^t, so both bias
  // corrected moments are exactly 1 and every step moves theta by
  // lr / (1 + eps) = 9.9999999000000010e-4.
  const double table[10] = {
      -9.9999999000000010e-4, -1.9999999800000002e-3, -2.9999999700000003e-3, -3.9999999600000004e-3,
      -4.9999999500000005e-3, -5.9999999400000006e-3, -6.9999999300000007e-3, -7.9999999200000008e-3,
      -8.9999999100000009e-3, -9.9999999000000010e-3};
  std::vector<Tensor<double>> p{Tensor<double>(Shape{1})};
  AdamState<double> s;
  for (int t = 0; t < 10; ++t) {
    adam_step(p, {Tensor<double>(Shape{1}, 1.0)}, s, AdamConfig{});
    EXPECT_NEAR(p[0][0], table[t], 1e-12) << "step " << t + 1;
    EXPECT_NEAR(s.m[0][0], 1.0 - std::pow(0.9, t + 1), 1e-15);
    EXPECT_NEAR(s.v[0][0], 1.0 - std::pow(0.999, t + 1), 1e-15);
  }
}

TEST(Adam, MatchesRecurrenceForVaryingGradients) {
  const AdamConfig cfg{0.01, 0.8, 0.95, 1e-6};
  std::vector<Tensor<double>> p{Tensor<double>(Shape{2}, std::vector<double>{1.0, -2.0})};
  AdamState<double> s;
  double theta[2] = {1.0, -2.0}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 25; ++t) {
    const double g[2] = {std::sin(t), 0.3 * t - 2.0};
    adam_step(p, {Tensor<double>(Shape{2}, std::vector<double>{g[0], g[1]})}, s, cfg);
    for (int k = 0; k < 2; ++k) {
      m[k] = 0.8 * m[k] + 0.2 * g[k];
      v[k] = 0.95 * v[k] + 0.05 * g[k] * g[k];
      const double mh = m[k] / (1 - std::pow(0.8, t)), vh = v[k] / (1 - std::pow(0.95, t));
      theta[k] -= 0.01 * mh / (std::sqrt(vh) + 1e-6);
      EXPECT_NEAR(p[0][static_cast<std::size_t>(k)], theta[k], 1e-12);
    }
  }
}

TEST(Adam, RejectsShapeMismatch) {
  std::vector<Tensor<double>> p{Tensor<double>(Shape{2})};
  AdamState<double> s;
  EXPECT_THROW(adam_step(p, {Tensor<double>(Shape{3})}, s, AdamConfig{}), std::invalid_argument);
  EXPECT_THROW(adam_step(p, {}, s, AdamConfig{}), std::invalid_argument);
}

TEST(AdamConfig, Validation) {
  EXPECT_EQ(AdamConfig{}.validate(), "");
  EXPECT_NE((AdamConfig{1e-3, 1.0, 0.999, 1e-8}.validate()), "");
  EXPECT_NE((AdamConfig{1e-3, 0.9, 0.999, 0.0}.validate()), "");
  EXPECT_NE((AdamConfig{0.0, 0.9, 0.999, 1e-8}.validate()), "");
}
