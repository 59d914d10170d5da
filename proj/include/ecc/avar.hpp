#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "ecc/debias.hpp"
#include "ecc/errors.hpp"
#include "ecc/mp_law.hpp"

namespace ecc {

struct LimitParams {
  double u = 1.0;
  double v = 1.0;
  double varrho = 0.0;
  double rho = 0.0;
  double c = 1.0;

  void validate() const {
    require(u > 0.0 && v > 0.0, "u and v must be positive");
    require(c > 0.0 && std::isfinite(c), "c must be positive");
    require(std::abs(rho) <= 1.0, "rho must lie in [-1, 1]");
    if (std::abs(varrho) > u * v * (1.0 + 1e-12)) throw CauchySchwarzViolation("|varrho| > u v");
  }
};

struct VarianceBreakdown {
  double var_of_cond_exp = 0.0;
  double exp_of_cond_var = 0.0;
  double total = 0.0;
};

// Variance of A Y for jointly Gaussian (A, Y) with variances 1+u^2, 1+v^2 and covariance varrho+rho.
inline double var_ay(const LimitParams& p) {
  const double s = p.rho + p.varrho;
  return (1.0 + p.u * p.u) * (1.0 + p.v * p.v) + s * s;
}

// Limit of n var(a^T f(Sigma_hat) b) for ||a|| = u, ||b|| = v, a^T b = varrho.
template <class F>
double bilinear_variance_limit(double u, double v, double varrho, double c, const F& f) {
  return (varrho * varrho + u * u * v * v) / c * var_F(MpLaw(c), f);
}

namespace detail {

// Spectral moments on the two poles.
struct Moments {
  double I1, I2, J1, J2, K1, K2, L1, L2;
};

inline Moments moments(const MpLaw& law, double l1, double l2) {
  auto q = [&](int a, double lam, int b, double pref) {
    return mp_integral(law, SpectralIntegrand{a, lam, b, 0.0, 0, pref});
  };
  return {q(1, l1, 1, 1.0),      q(1, l2, 1, 1.0),      q(1, l1, 2, 1.0),      q(1, l2, 2, 1.0),
          q(2, l1, 2, 1.0),      q(2, l2, 2, 1.0),      q(0, l1, 2, l1 * l1), q(0, l2, 2, l2 * l2)};
}

// n var of the conditional mean a ah^T bh + b ah^T b0 + d a0^T bh (+ const),
// with ah = alpha_hat, bh = beta_hat fit on one shared design.
inline double combo_two_split(const MpLaw& law, const LimitParams& p, double l1, double l2, double a, double b,
                              double d) {
  using S = SpectralSum;
  const double c = law.c;
  const S s = S::term(l1, l2, a, 2, 1, 1) + S::term(l1, l2, b, 1, 1, 0) + S::term(l1, l2, d, 1, 0, 1);
  const S ge = S::term(l1, l2, a, 1, 1, 1) + S::term(l1, l2, b, 0, 1, 0);
  const S gm = S::term(l1, l2, a, 1, 1, 1) + S::term(l1, l2, d, 0, 0, 1);
  const S x = S::term(l1, l2, 1.0, 1, 0, 0);
  const double u2 = p.u * p.u, v2 = p.v * p.v;
  return (u2 * v2 + p.varrho * p.varrho) / c * var_F(law, s) + v2 * mp_integral(law, x * ge * ge) +
         u2 * mp_integral(law, x * gm * gm) + 2.0 * p.rho * p.varrho * mp_integral(law, x * ge * gm) +
         a * a * c * (1.0 + p.rho * p.rho) * mp_integral(law, S::term(l1, l2, 1.0, 2, 2, 2));
}

// Three-split analogue: alpha_hat and beta_hat come from independent designs.
inline double combo_three_split(const MpLaw& law, const LimitParams& p, const Moments& m, double l1, double l2,
                                double a, double b, double d) {
  const double c = law.c;
  const double u2 = p.u * p.u, v2 = p.v * p.v;
  const double W2 = a * a * (v2 * m.K2 + c * m.J2) + 2.0 * a * b * v2 * m.I2 + b * b * v2;
  const double rw = p.varrho * (a * m.I2 + b);
  const double var1 = var_F(law, SpectralIntegrand{1, l1, 1, 0.0, 0, 1.0});
  const double var2 = var_F(law, SpectralIntegrand{1, l2, 1, 0.0, 0, 1.0});
  const double Vb = (u2 * v2 + p.varrho * p.varrho) / c * var2 + u2 * m.J2;
  const double e = a * m.I1 + d;
  return (u2 * W2 + rw * rw) / c * var1 + W2 * m.J1 + e * e * Vb;
}

}  // namespace detail

inline VarianceBreakdown limiting_variance(EstimatorKind kind, Split split, const LimitParams& params, double l1,
                                           double l2, Nr2spVariant variant = Nr2spVariant::ProofVersion) {
  params.validate();
  detail::check_lambdas(l1, l2);
  const MpLaw law(params.c);
  const GConstants g = compute_constants(law, l1, l2);
  const Normalizer h = normalizer(kind, split, g, variant);
  const detail::Moments m = detail::moments(law, l1, l2);
  const double u2 = params.u * params.u, v2 = params.v * params.v;
  const double mse_a = u2 * m.L1 + params.c * m.J1;
  const double mse_b = v2 * m.L2 + params.c * m.J2;

  double ecv = 0.0, a = 0.0, b = 0.0, d = 0.0;
  switch (kind) {
    case EstimatorKind::INT:
      ecv = var_ay(params);
      a = h.K;
      break;
    case EstimatorKind::NR: {
      const double s = params.varrho * g.nr + params.rho;
      ecv = (mse_a + 1.0) * (v2 + 1.0) + s * s;
      a = h.K;
      b = 1.0;
      break;
    }
    case EstimatorKind::DR: {
      const double dg = split == Split::ThreeSplit ? params.varrho * g.dr3 : params.varrho * g.dr2 + params.rho * g.g2;
      const double s = dg + params.rho;
      ecv = (mse_a + 1.0) * (mse_b + 1.0) + s * s;
      a = 1.0 - h.K;
      b = -1.0;
      d = -1.0;
      break;
    }
  }
  const double vce = split == Split::TwoSplit ? detail::combo_two_split(law, params, l1, l2, a, b, d)
                                              : detail::combo_three_split(law, params, m, l1, l2, a, b, d);
  const double h2 = h.H * h.H;
  VarianceBreakdown out;
  out.exp_of_cond_var = h2 * ecv;
  out.var_of_cond_exp = h2 * vce;
  out.total = out.exp_of_cond_var + out.var_of_cond_exp;
  return out;
}

struct CurvePoint {
  double lambda = 0.0;
  std::optional<VarianceBreakdown> value;  // empty when the normalizer is degenerate
};

struct OptimizeResult {
  double lambda_star = 0.0;
  double value = 0.0;
  std::vector<CurvePoint> curve;
};

inline std::vector<CurvePoint> variance_curve(EstimatorKind kind, Split split, const LimitParams& params,
                                              const std::vector<double>& grid,
                                              Nr2spVariant variant = Nr2spVariant::ProofVersion) {
  std::vector<CurvePoint> curve;
  curve.reserve(grid.size());
  for (double lam : grid) {
    CurvePoint pt{lam, std::nullopt};
    try {
      pt.value = limiting_variance(kind, split, params, lam, lam, variant);
    } catch (const DegenerateNormalizer&) {
    }
    curve.push_back(pt);
  }
  return curve;
}

// Argmin over evaluable points; the smallest lambda wins ties.
inline OptimizeResult argmin_curve(std::vector<CurvePoint> curve) {
  OptimizeResult r;
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (const auto& pt : curve) {
    if (!pt.value) continue;
    if (!found || pt.value->total < best) {
      best = pt.value->total;
      r.lambda_star = pt.lambda;
      found = true;
    }
  }
  if (!found) throw AllDegenerate("no evaluable grid point");
  r.value = best;
  r.curve = std::move(curve);
  return r;
}

inline void check_grid(const std::vector<double>& grid) {
  require(!grid.empty(), "grid must be non-empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] > 0.0 && std::isfinite(grid[i]), "grid points must be positive");
    if (i > 0) require(grid[i] > grid[i - 1], "grid must be strictly increasing");
  }
}

inline OptimizeResult optimize_lambda(EstimatorKind kind, Split split, const LimitParams& params,
                                      const std::vector<double>& grid,
                                      Nr2spVariant variant = Nr2spVariant::ProofVersion) {
  check_grid(grid);
  return argmin_curve(variance_curve(kind, split, params, grid, variant));
}

}  // namespace ecc
