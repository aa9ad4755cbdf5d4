#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "mltherm/report.hpp"
#include "mltherm/state_evolution.hpp"

using namespace mltherm;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::InvalidArgument;
}

double total(const JointEstimate& j) { return std::accumulate(j.probs.begin(), j.probs.end(), 0.0); }

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Dataset constant_x(double x, int n) {
  return Dataset(Eigen::MatrixXd::Constant(n, 1, x), Eigen::VectorXd::LinSpaced(n, 0.0, 1.0) * x);
}

}  // namespace

TEST(JointHistogram, OnePointPerCell) {
  const auto j = joint_histogram(Dataset::from_points({{0, 0}, {1, 0}, {0, 1}, {1, 1}}), std::vector<int>{2});
  ASSERT_EQ(j.probs.size(), 4u);
  for (double p : j.probs) EXPECT_DOUBLE_EQ(p, 0.25);
  EXPECT_EQ(j.source, JointSource::Histogram);
  EXPECT_NEAR(data_entropy(j), std::log(4.0), 1e-15);
}

TEST(JointHistogram, SingleCell) {
  const auto j = joint_histogram(Dataset::from_points({{2, 3}, {2, 3}, {2, 3}}));
  ASSERT_EQ(j.probs.size(), 1u);
  EXPECT_EQ(j.probs[0], 1.0);
  EXPECT_EQ(data_entropy(j), 0.0);
}

TEST(JointHistogram, DuplicationInvariant) {
  const Dataset d = synth(LinearNoiseParams{1.0, 0.0, 0.5, 2}, 30, 1);
  const auto a = joint_histogram(d, std::vector<int>{4, 3, 5});
  const auto b = joint_histogram(concat(d, d), std::vector<int>{4, 3, 5});
  EXPECT_EQ(a.support, b.support);
  EXPECT_EQ(a.probs, b.probs);
}

TEST(JointHistogram, DefaultBinsAndLimits) {
  const Dataset d = synth(LinearNoiseParams{1.0, 0.0, 0.5, 1}, 50, 2);
  const auto j = joint_histogram(d);
  for (const auto& cell : j.support) {
    for (int c : cell) EXPECT_LT(c, 8);  // ceil(sqrt(50)) = 8
  }
  EXPECT_NEAR(total(j), 1.0, 1e-12);
  EXPECT_EQ(code_of([] { joint_histogram(synth(LinearNoiseParams{1, 0, 0, 3}, 10, 0)); }), Errc::DimensionTooHigh);
  EXPECT_THROW(joint_histogram(d, std::vector<int>{0}), Error);
  EXPECT_THROW(joint_histogram(d, std::vector<int>{2, 2, 2}), Error);
}

TEST(JointFromModel, LogisticUniformHalf) {
  const Dataset xs = Dataset::from_points({{0, 0}, {1, 1}});
  const auto j = joint_from_model(EnergyForm::cross_entropy(), {vec({0, 0})}, xs, MarginalKind::Uniform, {},
                                  std::vector<int>{2});
  ASSERT_EQ(j.probs.size(), 4u);
  for (double p : j.probs) EXPECT_DOUBLE_EQ(p, 0.25);
  EXPECT_EQ(j.source, JointSource::ModelConditional);
  ASSERT_TRUE(j.marginal);
  EXPECT_EQ(*j.marginal, MarginalKind::Uniform);
}

TEST(JointFromModel, ConfidentLogisticCollapsesToMarginal) {
  const Dataset xs = synth(LogisticParams{1.0, 0.0, 1}, 40, 3);
  const auto j = joint_from_model(EnergyForm::cross_entropy(), {vec({0, 60})}, xs, MarginalKind::Empirical);
  for (std::size_t i = 0; i < j.support.size(); ++i) EXPECT_EQ(j.support[i].back(), 1);
  // Entropy of the empirical x-marginal on the same cells.
  const auto hist = joint_histogram(Dataset(xs.features(), Eigen::VectorXd::Zero(xs.n())));
  EXPECT_NEAR(data_entropy(j), data_entropy(hist), 1e-12);
}

TEST(JointFromModel, RegressionNeedsNoise) {
  const Dataset xs = synth(LinearNoiseParams{1.0, 0.0, 0.2, 1}, 10, 4);
  EXPECT_EQ(code_of([&] { joint_from_model(EnergyForm::mse(), {vec({1, 0})}, xs, MarginalKind::Empirical); }),
            Errc::MissingNoiseSpec);
}

TEST(JointFromModel, RegressionGaussianAndPointMass) {
  const Dataset xs = synth(LinearNoiseParams{1.0, 0.0, 0.3, 1}, 36, 5);
  const auto fit = min_energy(EnergyForm::mse(), xs);
  const auto wide = joint_from_model(EnergyForm::mse(), fit.params, xs, MarginalKind::Empirical,
                                     NoiseSpec{std::sqrt(fit.finalEnergy)});
  EXPECT_NEAR(total(wide), 1.0, 1e-12);
  for (double p : wide.probs) EXPECT_GT(p, 0.0);
  const auto sharp = joint_from_model(EnergyForm::mse(), fit.params, xs, MarginalKind::Empirical, NoiseSpec{0.0});
  EXPECT_NEAR(total(sharp), 1.0, 1e-12);
  EXPECT_LT(data_entropy(sharp), data_entropy(wide));
  const auto x_only = joint_histogram(Dataset(xs.features(), Eigen::VectorXd::Zero(xs.n())));
  EXPECT_NEAR(data_entropy(sharp), data_entropy(x_only), 1e-12);
}

TEST(DataEntropy, Examples) {
  JointEstimate j;
  j.probs = {0.25, 0.25, 0.25, 0.25};
  EXPECT_NEAR(data_entropy(j), 1.3863, 1e-4);
  j.probs = {1.0};
  EXPECT_EQ(data_entropy(j), 0.0);
  j.probs = {0.5, 0.25, 0.25};
  EXPECT_NEAR(data_entropy(j), 1.5 * std::log(2.0), 1e-15);
  EXPECT_NEAR(data_entropy(j), 1.0397, 1e-4);
}

TEST(DataEntropy, Bounds) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Dataset d = synth(LinearNoiseParams{u(rng) * 3, 0.0, u(rng), 1 + trial % 2}, 5 + trial, rng());
    const auto j = joint_histogram(d);
    EXPECT_NEAR(total(j), 1.0, 1e-12);
    const double s = data_entropy(j);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, std::log(static_cast<double>(j.probs.size())) + 1e-12);
  }
}

TEST(ShiftTemperature, Examples) {
  EXPECT_NEAR(shift_temperature(2, std::log(4.0), 1, 0), -1.0 / std::log(4.0), 1e-15);
  EXPECT_NEAR(shift_temperature(2, std::log(4.0), 1, 0), -0.7213, 1e-4);
  EXPECT_EQ(shift_temperature(5, 1.0, 5, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(shift_temperature(1, 1, 3, 0.5), 4.0);
  EXPECT_EQ(code_of([] { shift_temperature(1, 0.7, 2, 0.7); }), Errc::Undefined);
}

TEST(Pipeline, IdenticalDatasets) {
  const Dataset d = synth(LinearNoiseParams{1.0, 0.0, 0.3, 1}, 25, 7);
  const auto steps = refresh_pipeline({d, d, d}, EnergyForm::mse(), InitDistribution::normal({2, 2}));
  ASSERT_EQ(steps.size(), 3u);
  for (const auto& s : steps) {
    EXPECT_FALSE(s.shiftT);
    ASSERT_TRUE(s.phaseT);
    EXPECT_EQ(*s.phaseT, *steps[0].phaseT);
    EXPECT_TRUE(s.errors.empty());
  }
}

TEST(Pipeline, ArityAndComposition) {
  std::vector<Dataset> seq;
  for (int j = 0; j < 3; ++j) seq.push_back(synth(LinearNoiseParams{1.0 + j, 0.0, 0.2 + 0.4 * j, 1}, 30, 10 + j));
  const auto steps = refresh_pipeline(seq, EnergyForm::mse(), InitDistribution::normal({2, 2}));
  int shift = 0, phase = 0;
  for (const auto& s : steps) {
    shift += s.shiftT.has_value();
    phase += s.phaseT.has_value();
  }
  EXPECT_EQ(shift, 2);
  EXPECT_EQ(phase, 3);
  EXPECT_FALSE(steps.back().shiftT);
  for (int j = 0; j < 2; ++j) {
    EXPECT_EQ(*steps[j].shiftT, shift_temperature(*steps[j].energy, *steps[j].dataEntropy, *steps[j + 1].energy,
                                                  *steps[j + 1].dataEntropy));
  }
}

TEST(Pipeline, HandBuiltJoints) {
  // Two states with hand-specified 2x2 joints: uniform, then skewed.
  JointEstimate a, b;
  a.probs = {0.25, 0.25, 0.25, 0.25};
  b.probs = {0.4, 0.1, 0.1, 0.4};
  const double sa = data_entropy(a), sb = data_entropy(b);
  const double t = shift_temperature(0.8, sa, 1.1, sb);
  EXPECT_NEAR(t, 0.3 / (std::log(4.0) - (-0.8 * std::log(0.4) - 0.2 * std::log(0.1))), 1e-12);
}

TEST(Pipeline, ReversedSequenceKeepsValue) {
  const Dataset a = synth(LinearNoiseParams{1.0, 0.0, 0.2, 1}, 30, 20);
  const Dataset b = synth(LinearNoiseParams{2.0, 0.5, 0.9, 1}, 30, 21);
  const auto dist = InitDistribution::normal({3, 3});
  const auto fwd = refresh_pipeline({a, b}, EnergyForm::mse(), dist);
  const auto rev = refresh_pipeline({b, a}, EnergyForm::mse(), dist);
  ASSERT_TRUE(fwd[0].shiftT && rev[0].shiftT);
  EXPECT_NEAR(*fwd[0].shiftT, *rev[0].shiftT, 1e-12 * std::abs(*fwd[0].shiftT));
  EXPECT_NEAR(*fwd[1].energy - *fwd[0].energy, -(*rev[1].energy - *rev[0].energy), 1e-12);
}

TEST(Pipeline, FailedStepContinues) {
  const Dataset good1 = synth(LogisticParams{1.0, 0.0, 1}, 40, 30);
  const Dataset bad = synth(LinearNoiseParams{1.0, 0.0, 0.3, 1}, 40, 31);
  const Dataset good2 = synth(LogisticParams{2.0, 0.5, 1}, 40, 32);
  JointConfig cfg;
  cfg.oracleSamples = 2000;
  const auto steps = refresh_pipeline({good1, bad, good2}, EnergyForm::cross_entropy(),
                                      InitDistribution::normal({2, 2}), cfg);
  ASSERT_EQ(steps.size(), 3u);
  EXPECT_TRUE(steps[0].errors.empty());
  EXPECT_FALSE(steps[1].errors.empty());
  EXPECT_FALSE(steps[1].phaseT);
  EXPECT_FALSE(steps[0].shiftT);
  EXPECT_TRUE(steps[2].phaseT);
  EXPECT_TRUE(steps[2].dataEntropy);
  EXPECT_EQ(to_json(steps[1])["phaseT"], "undefined");
  EXPECT_THROW(refresh_pipeline({good1}, EnergyForm::cross_entropy(), InitDistribution::normal({2, 2})), Error);
}

TEST(Mixing, ConstructedExample) {
  const Dataset a = Dataset::from_points({{2, 1}, {2, -1}});
  const Dataset b = Dataset::from_points({{0.5, 1}, {0.5, 0}});
  const auto r = mixing_experiment(a, b, EnergyForm::mse(), Family::Normal, 1e3);
  EXPECT_DOUBLE_EQ(r.X2A, (4.0 + 1.0) / 2);
  EXPECT_DOUBLE_EQ(r.X2B, (0.25 + 1.0) / 2);
  EXPECT_DOUBLE_EQ(r.X2AB, (2.125 + 1.0) / 2);
  EXPECT_LT(r.TB, r.TAB);
  EXPECT_LT(r.TAB, r.TA);
  EXPECT_LT(r.deltaEA, 0.0);
  EXPECT_GT(r.deltaEB, 0.0);
  EXPECT_EQ(r.flow, "A->B");
  EXPECT_NEAR(r.deltaEA * r.nA + r.deltaEB * r.nB, 0.0, 1e-9 * std::abs(r.deltaEA));
}

TEST(Mixing, Equilibrium) {
  const Dataset a = synth(LinearNoiseParams{1.0, 0.0, 0.3, 2}, 12, 40);
  const auto r = mixing_experiment(a, a, EnergyForm::mse(), Family::Uniform, 100);
  EXPECT_DOUBLE_EQ(r.TA, r.TB);
  EXPECT_NEAR(r.TAB, r.TA, 1e-12 * r.TA);
  EXPECT_NEAR(r.deltaEA, 0.0, 1e-9);
  EXPECT_NEAR(r.deltaEB, 0.0, 1e-9);
  EXPECT_EQ(r.flow, "none");
}

TEST(Mixing, BetweennessAndAntisymmetry) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.1, 4.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Dataset a = constant_x(u(rng), 3 + trial % 5);
    const Dataset b = synth(GaussianCloudParams{u(rng), 1.0, 1}, 4 + trial % 7, rng());
    const auto r = mixing_experiment(a, b, EnergyForm::mse(), trial % 2 ? Family::Normal : Family::Uniform, 50);
    if (r.X2A == r.X2B) continue;
    EXPECT_GT(r.TAB, std::min(r.TA, r.TB));
    EXPECT_LT(r.TAB, std::max(r.TA, r.TB));
    EXPECT_LT(r.deltaEA * r.deltaEB, 0.0);
    EXPECT_NEAR(r.deltaEA * r.nA + r.deltaEB * r.nB, 0.0, 1e-9 * std::abs(r.deltaEA * r.nA));
    EXPECT_EQ(r.TA > r.TB, r.deltaEA < 0.0);
  }
}

TEST(Mixing, RejectsNonMse) {
  const Dataset a = Dataset::from_points({{2, 1}});
  EXPECT_EQ(code_of([&] { mixing_experiment(a, a, EnergyForm::mae(), Family::Normal, 100); }), Errc::Unsupported);
}
