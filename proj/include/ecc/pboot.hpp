#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "ecc/debias.hpp"
#include "ecc/dgp.hpp"
#include "ecc/errors.hpp"
#include "ecc/mp_law.hpp"
#include "ecc/parallel.hpp"

namespace ecc {

struct BootConstants {
  double c1 = 0.0, d1 = 0.0, c2 = 0.0, d2 = 0.0, c3 = 0.0;
  double g1 = 0.0, g2 = 0.0;
};

inline BootConstants compute_boot_constants(const MpLaw& law, double l1, double l2) {
  detail::check_lambdas(l1, l2);
  auto q = [&](int a, double lam, int b, double pref) {
    return mp_integral(law, SpectralIntegrand{a, lam, b, 0.0, 0, pref});
  };
  BootConstants k;
  k.c1 = q(2, l1, 2, 1.0);
  k.c2 = q(2, l2, 2, 1.0);
  k.d1 = q(1, l1, 2, law.c);
  k.d2 = q(1, l2, 2, law.c);
  k.c3 = q(1, l1, 1, 1.0) * q(1, l2, 1, 1.0);
  k.g1 = mp_integral(law, SpectralIntegrand{2, l1, 1, l2, 1, 1.0});
  k.g2 = mp_integral(law, SpectralIntegrand{1, l1, 1, l2, 1, law.c});
  return k;
}

struct TransformedCoefficients {
  Eigen::VectorXd alpha_tilde;
  Eigen::VectorXd beta_tilde;
  bool clamped = false;
};

// Unit vector orthogonal to `unit`: the least-aligned basis vector, Gram-Schmidt'ed.
inline Eigen::VectorXd orthogonal_direction(const Eigen::VectorXd& unit) {
  if (unit.size() < 2) throw DimensionError("an orthogonal direction needs p >= 2");
  Eigen::Index k = 0;
  unit.cwiseAbs().minCoeff(&k);
  Eigen::VectorXd z = -unit[k] * unit;
  z[k] += 1.0;
  return z / z.norm();
}

inline TransformedCoefficients transform_coefficients(const Eigen::VectorXd& alpha_hat,
                                                      const Eigen::VectorXd& beta_hat, double rho_hat,
                                                      const BootConstants& k, Split split) {
  if (alpha_hat.size() != beta_hat.size()) throw SizeMismatch("alpha_hat and beta_hat lengths differ");
  const double na = alpha_hat.norm();
  if (!(na > 0.0)) throw ZeroDirection("alpha_hat is the zero vector");
  const Eigen::VectorXd dir = alpha_hat / na;
  const Eigen::VectorXd z = orthogonal_direction(dir);
  TransformedCoefficients out;
  auto clamp = [&](double r) {
    if (r < 0.0) {
      out.clamped = true;
      return 0.0;
    }
    return r;
  };
  const double s_a = std::sqrt(clamp((na * na - k.d1) / k.c1));
  const double ab = alpha_hat.dot(beta_hat);
  const double inner = split == Split::ThreeSplit ? ab / k.c3 : (ab - k.g2 * rho_hat) / k.g1;
  const double t = s_a > 0.0 ? inner / s_a : 0.0;
  const double s_z = std::sqrt(clamp((beta_hat.squaredNorm() - k.d2) / k.c2 - t * t));
  out.alpha_tilde = s_a * dir;
  out.beta_tilde = t * dir + s_z * z;
  return out;
}

struct BootstrapResult {
  double variance_estimate = std::numeric_limits<double>::quiet_NaN();
  int B = 0;
  bool clamped = false;
  bool degenerate = false;
  std::vector<double> replicates;
};

// Second moment minus squared mean.
inline double plain_variance(const std::vector<double>& xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(xs.size());
  double m = 0.0;
  for (double x : xs) m += x;
  m /= n;
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / n;
}

// One bootstrap world: n rows per split from (alpha_tilde, beta_tilde, rho_hat).
inline double bootstrap_replicate(const DebiasPlan& plan, const Normalizer& h, const ModelParams& model, long n,
                                  std::uint64_t seed) {
  const int k = split_count(plan.split);
  const Dataset data = generate(model, k * n, seed);
  const auto views = split(data, SplitLayout::uniform(plan.split, n));
  const DatasetView& d_beta = plan.split == Split::ThreeSplit ? views[1] : views[0];
  const auto nf = fit_nuisances(plan.split, views[0], d_beta, plan.lambda1, plan.lambda2);
  return debiased_from_stats(plan.kind, eval_stats(nf.alpha_hat, nf.beta_hat, views.back()), h);
}

inline BootstrapResult bootstrap_variance(const DebiasPlan& plan, const Eigen::VectorXd& alpha_hat,
                                          const Eigen::VectorXd& beta_hat, double rho_hat, long n, int B,
                                          std::uint64_t seed, int threads = 1) {
  require(B >= 2, "bootstrap needs B >= 2");
  require(n >= 1, "n must be >= 1");
  BootstrapResult res;
  res.B = B;
  Normalizer h;
  try {
    h = plan.normalizer();
  } catch (const DegenerateNormalizer&) {
    res.degenerate = true;
    return res;
  }
  const MpLaw law = MpLaw::from_dims(alpha_hat.size(), n);
  const BootConstants k = compute_boot_constants(law, plan.lambda1, plan.lambda2);
  const auto tc = transform_coefficients(alpha_hat, beta_hat, rho_hat, k, plan.split);
  res.clamped = tc.clamped;
  const ModelParams model{tc.alpha_tilde, tc.beta_tilde, std::clamp(rho_hat, -1.0, 1.0)};
  res.replicates.assign(static_cast<std::size_t>(B), 0.0);
  parallel_for(res.replicates.size(), threads, [&](std::size_t b) {
    res.replicates[b] = bootstrap_replicate(plan, h, model, n, substream_seed(seed, {0xB007ULL, b}));
  });
  res.variance_estimate = plain_variance(res.replicates);
  return res;
}

}  // namespace ecc
