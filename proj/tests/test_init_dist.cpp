#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mltherm/init_dist.hpp"

using namespace mltherm;

TEST(Entropy, StandardNormal) {
  EXPECT_NEAR(differential_entropy(InitDistribution::normal({1.0})), 1.41894, 1e-5);
}

TEST(Entropy, UnitBox) {
  EXPECT_DOUBLE_EQ(differential_entropy(InitDistribution::uniform({1.0, 1.0})), 0.0);
}

TEST(Entropy, Mixed) {
  const auto d = InitDistribution::mixed({1.0}, {std::sqrt(12.0)});
  EXPECT_NEAR(differential_entropy(d), 2.66139, 1e-5);
  EXPECT_NEAR(differential_entropy(d), 0.5 * (1 + std::log(2 * M_PI)) + 0.5 * std::log(12.0), 1e-14);
}

TEST(Entropy, CanBeNegative) {
  EXPECT_LT(differential_entropy(InitDistribution::uniform({0.5})), 0.0);
  EXPECT_LT(differential_entropy(InitDistribution::normal({0.1})), 0.0);
}

TEST(Entropy, Properties) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.05, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s{u(rng), u(rng)};
    std::vector<double> l{u(rng), u(rng), u(rng)};
    const auto mixed = InitDistribution::mixed(s, l);
    EXPECT_NEAR(differential_entropy(mixed),
                differential_entropy(mixed.normalBlock()) + differential_entropy(mixed.uniformBlock()),
                1e-12);

    const double c = u(rng);
    auto scaled = s;
    for (double& v : scaled) v *= c;
    EXPECT_NEAR(differential_entropy(InitDistribution::normal(scaled)),
                differential_entropy(InitDistribution::normal(s)) + 2 * std::log(c), 1e-12);

    auto bigger = l;
    bigger[trial % 3] *= 1.01;
    EXPECT_GT(differential_entropy(InitDistribution::uniform(bigger)),
              differential_entropy(InitDistribution::uniform(l)));
    auto wider = s;
    wider[trial % 2] *= 1.01;
    EXPECT_GT(differential_entropy(InitDistribution::normal(wider)),
              differential_entropy(InitDistribution::normal(s)));
  }
}

TEST(VarianceEquivalent, Examples) {
  const auto u = variance_equivalent_sigma(InitDistribution::uniform({std::sqrt(12.0)}));
  ASSERT_EQ(u.size(), 1u);
  EXPECT_NEAR(u[0], 1.0, 1e-15);
  EXPECT_EQ(variance_equivalent_sigma(InitDistribution::normal({2, 3})), (std::vector<double>{2, 3}));
  const auto m = variance_equivalent_sigma(InitDistribution::mixed({1.0}, {2 * std::sqrt(3.0)}));
  ASSERT_EQ(m.size(), 2u);
  EXPECT_DOUBLE_EQ(m[0], 1.0);
  EXPECT_NEAR(m[1], 1.0, 1e-15);
}

TEST(Construction, Invariants) {
  EXPECT_THROW(InitDistribution::normal({1.0, 0.0}), Error);
  EXPECT_THROW(InitDistribution::uniform({-1.0}), Error);
  EXPECT_THROW(InitDistribution::normal({}), Error);
  EXPECT_THROW(InitDistribution::mixed({1.0}, {}), Error);
  const auto m = InitDistribution::mixed({1.0, 2.0}, {3.0});
  EXPECT_EQ(m.normalDims(), 2u);
  EXPECT_EQ(m.uniformDims(), 1u);
  EXPECT_EQ(m.dim(), 3u);
}

TEST(Sample, Deterministic) {
  const auto d = InitDistribution::mixed({1.0, 2.0}, {3.0});
  EXPECT_EQ(sample(d, 10000, 5), sample(d, 10000, 5));
  EXPECT_NE(sample(d, 100, 5), sample(d, 100, 6));
}

TEST(Sample, PrefixStable) {
  // Row r depends only on (seed, r); a longer draw extends a shorter one.
  const auto d = InitDistribution::normal({1.0});
  const Eigen::MatrixXd a = sample(d, 5000, 3);
  const Eigen::MatrixXd b = sample(d, 9000, 3);
  EXPECT_EQ(a, b.topRows(5000));
}

TEST(Sample, NormalVariance) {
  const Eigen::MatrixXd x = sample(InitDistribution::normal({2.0}), 1000000, 11);
  const double mean = x.col(0).mean();
  const double var = (x.col(0).array() - mean).square().mean();
  // Var of the sample variance for a normal is 2 sigma^4 / n.
  EXPECT_NEAR(var, 4.0, 3 * std::sqrt(2 * 16.0 / 1e6));
}

TEST(Sample, UniformSupportAndVariance) {
  const Eigen::MatrixXd x = sample(InitDistribution::uniform({6.0}), 200000, 2);
  EXPECT_GE(x.minCoeff(), -3.0);
  EXPECT_LE(x.maxCoeff(), 3.0);
  const double var = x.col(0).array().square().mean();
  // E[x^4] = l^4 / 80 for a centred uniform.
  EXPECT_NEAR(var, 3.0, 3 * std::sqrt((1296.0 / 80 - 9.0) / 2e5));
}

TEST(Json, RoundTrip) {
  const auto d = InitDistribution::mixed({1.5}, {2.0, 4.0});
  EXPECT_EQ(init_from_json(to_json(d)), d);
  EXPECT_THROW(init_from_json(nlohmann::json{{"kind", "normal"}, {"sigmas", {1}}, {"covariance", {{1}}}}),
               Error);
  EXPECT_THROW(init_from_json(nlohmann::json{{"kind", "cauchy"}}), Error);
}
