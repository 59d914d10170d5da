#include <gtest/gtest.h>

#include "ecc/avar.hpp"
#include "ecc/dgp.hpp"
#include "ecc/pboot.hpp"

using namespace ecc;

TEST(BootConstants, Definitions) {
  const MpLaw law(0.5);
  const auto k = compute_boot_constants(law, 0.7, 2.0);
  const auto g = compute_constants(law, 0.7, 2.0);
  EXPECT_NEAR(k.c3, g.int3, 1e-14);
  EXPECT_NEAR(k.g1, g.g1, 1e-14);
  EXPECT_NEAR(k.g2, g.g2, 1e-14);
  EXPECT_GT(k.c1, 0);
  EXPECT_GT(k.d1, 0);
  // ||ah - a0||^2 = ||ah||^2 - 2 ah^T a0 + u^2 with ||ah||^2 -> c1 u^2 + d1 and ah^T a0 -> u^2 I
  const double u = 1.3, lam = 0.7;
  const double I = resolvent_mass(law, lam);
  EXPECT_NEAR(k.c1 * u * u + k.d1 - 2 * u * u * I + u * u, prediction_mse_theory(law, u, lam), 1e-10);
}

TEST(Transform, InvertsTheLimitingMap) {
  const MpLaw law(0.5);
  const auto k = compute_boot_constants(law, 1.0, 1.0);
  const long p = 6;
  // alpha_hat with ||.||^2 = c1 + d1; beta_hat with ||.||^2 = c2 + d2 and inner c3 * 0.5
  Eigen::VectorXd ah = Eigen::VectorXd::Zero(p), bh = Eigen::VectorXd::Zero(p);
  ah[0] = std::sqrt(k.c1 + k.d1);
  const double inner = k.c3 * 0.5;
  bh[0] = inner / ah[0];
  bh[1] = std::sqrt(k.c2 + k.d2 - bh[0] * bh[0]);
  const auto t = transform_coefficients(ah, bh, 0.3, k, Split::ThreeSplit);
  EXPECT_NEAR(t.alpha_tilde.squaredNorm(), 1.0, 1e-10);
  EXPECT_NEAR(t.beta_tilde.squaredNorm(), 1.0, 1e-10);
  EXPECT_NEAR(t.alpha_tilde.dot(t.beta_tilde), 0.5, 1e-10);
  EXPECT_FALSE(t.clamped);
  // three-split transform ignores rho_hat
  const auto t2 = transform_coefficients(ah, bh, -0.9, k, Split::ThreeSplit);
  EXPECT_EQ(t.beta_tilde, t2.beta_tilde);
  // two-split: inner product (ah^T bh - g2 rho)/g1
  const double rho = 0.4;
  Eigen::VectorXd bh2 = bh;
  bh2[0] = (k.g1 * 0.5 + k.g2 * rho) / ah[0];
  bh2[1] = std::sqrt(k.c2 + k.d2 - bh2[0] * bh2[0]);
  const auto t3 = transform_coefficients(ah, bh2, rho, k, Split::TwoSplit);
  EXPECT_NEAR(t3.alpha_tilde.dot(t3.beta_tilde), 0.5, 1e-10);
  EXPECT_NEAR(t3.beta_tilde.squaredNorm(), 1.0, 1e-10);
}

TEST(Transform, ClampAndErrors) {
  const MpLaw law(0.5);
  const auto k = compute_boot_constants(law, 1.0, 1.0);
  Eigen::VectorXd ah = Eigen::VectorXd::Zero(4), bh = Eigen::VectorXd::Ones(4);
  ah[2] = 0.5 * std::sqrt(k.d1);
  const auto t = transform_coefficients(ah, bh, 0.5, k, Split::ThreeSplit);
  EXPECT_TRUE(t.clamped);
  EXPECT_EQ(t.alpha_tilde.norm(), 0.0);
  EXPECT_TRUE(t.beta_tilde.allFinite());
  EXPECT_THROW(transform_coefficients(Eigen::VectorXd::Zero(4), bh, 0.5, k, Split::ThreeSplit), ZeroDirection);
  EXPECT_THROW(transform_coefficients(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1), 0.5, k, Split::ThreeSplit),
               DimensionError);
  // the bootstrap still returns a finite variance from clamped inputs
  const auto plan = DebiasPlan::make(EstimatorKind::DR, Split::ThreeSplit, MpLaw::from_dims(4, 8), 1.0, 1.0);
  const auto r = bootstrap_variance(plan, ah, bh, 0.5, 8, 20, 3);
  EXPECT_TRUE(r.clamped);
  EXPECT_TRUE(std::isfinite(r.variance_estimate));
}

TEST(Transform, OrthogonalDirection) {
  Eigen::VectorXd a(3);
  a << 0.6, 0.0, 0.8;
  const auto z = orthogonal_direction(a);
  EXPECT_NEAR(z.dot(a), 0.0, 1e-15);
  EXPECT_NEAR(z.norm(), 1.0, 1e-15);
  EXPECT_EQ(z[1], 1.0);
}

TEST(Bootstrap, DeterministicAcrossThreads) {
  const long n = 60, p = 30;
  auto [a, b] = make_coefficients(p, 1.0, 1.0, 0.75, CoeffStyle::ExactGram, 0);
  const Dataset d = generate({a, b, 0.5}, 3 * n, 4);
  const auto v = split(d, SplitLayout::uniform(Split::ThreeSplit, n));
  const auto plan = DebiasPlan::make(EstimatorKind::INT, Split::ThreeSplit, MpLaw::from_dims(p, n), 1.0, 1.0);
  const auto nf = fit_nuisances(Split::ThreeSplit, v[0], v[1], 1.0, 1.0);
  const auto r1 = bootstrap_variance(plan, nf.alpha_hat, nf.beta_hat, 0.5, n, 40, 9, 1);
  const auto r2 = bootstrap_variance(plan, nf.alpha_hat, nf.beta_hat, 0.5, n, 40, 9, 3);
  EXPECT_EQ(r1.variance_estimate, r2.variance_estimate);
  EXPECT_EQ(r1.replicates, r2.replicates);
  EXPECT_GT(r1.variance_estimate, 0);
  EXPECT_THROW(bootstrap_variance(plan, nf.alpha_hat, nf.beta_hat, 0.5, n, 1, 9), ConfigError);
  // B = 2 smoke
  EXPECT_TRUE(std::isfinite(bootstrap_variance(plan, nf.alpha_hat, nf.beta_hat, 0.5, n, 2, 9).variance_estimate));
}

TEST(Bootstrap, PlainVariance) {
  EXPECT_DOUBLE_EQ(plain_variance({1.0, 3.0}), 1.0);
  EXPECT_DOUBLE_EQ(plain_variance({2.0, 2.0, 2.0}), 0.0);
}

TEST(Bootstrap, ScaleSanity) {
  // n var_boot within a factor 2 of the limiting variance at a stable lambda
  const long n = 500, p = 250;
  auto [a, b] = make_coefficients(p, 1.0, 1.0, 0.75, CoeffStyle::ExactGram, 0);
  const Dataset d = generate({a, b, 0.5}, 3 * n, 12);
  const auto v = split(d, SplitLayout::uniform(Split::ThreeSplit, n));
  const auto plan = DebiasPlan::make(EstimatorKind::DR, Split::ThreeSplit, MpLaw::from_dims(p, n), 1.0, 1.0);
  const auto nf = fit_nuisances(Split::ThreeSplit, v[0], v[1], 1.0, 1.0);
  const double rho_hat = debiased_estimate(plan, v[0], v[1], v[2]);
  const auto r = bootstrap_variance(plan, nf.alpha_hat, nf.beta_hat, rho_hat, n, 200, 13);
  const double th = limiting_variance(EstimatorKind::DR, Split::ThreeSplit, {1, 1, 0.75, 0.5, 0.5}, 1, 1).total;
  EXPECT_GT(n * r.variance_estimate, th / 2);
  EXPECT_LT(n * r.variance_estimate, th * 2);
}

TEST(Transform, LargeSampleConsistency) {
  // n = 2000, c = 0.5, (u^2, v^2, varrho) = (1, 1, 0.75)
  const long n = 2000, p = 1000;
  auto [a, b] = make_coefficients(p, 1.0, 1.0, 0.75, CoeffStyle::ExactGram, 0);
  const auto k = compute_boot_constants(MpLaw::from_dims(p, n), 1.0, 1.0);
  for (int r = 0; r < 4; ++r) {
    const Dataset d = generate({a, b, 0.5}, 2 * n + 1, 100 + r);
    const auto v = split(d, SplitLayout{Split::ThreeSplit, {n, n, 1}});
    const auto nf = fit_nuisances(Split::ThreeSplit, v[0], v[1], 1.0, 1.0);
    const auto t = transform_coefficients(nf.alpha_hat, nf.beta_hat, 0.5, k, Split::ThreeSplit);
    EXPECT_NEAR(t.alpha_tilde.squaredNorm(), 1.0, 0.1);
    EXPECT_NEAR(t.beta_tilde.squaredNorm(), 1.0, 0.1);
    EXPECT_NEAR(t.alpha_tilde.dot(t.beta_tilde), 0.75, 0.1);
  }
}
