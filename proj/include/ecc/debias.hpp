#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "ecc/dgp.hpp"
#include "ecc/errors.hpp"
#include "ecc/mp_law.hpp"
#include "ecc/ridge.hpp"

namespace ecc {

enum class EstimatorKind { INT, NR, DR };
using Split = SplitStrategy;
enum class Nr2spVariant { ProofVersion, DisplayVersion };

inline constexpr std::array<EstimatorKind, 3> kAllKinds{EstimatorKind::INT, EstimatorKind::NR, EstimatorKind::DR};

inline std::string_view to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::INT: return "INT";
    case EstimatorKind::NR: return "NR";
    case EstimatorKind::DR: return "DR";
  }
  return "?";
}
inline EstimatorKind parse_kind(std::string_view s) {
  if (s == "INT" || s == "int") return EstimatorKind::INT;
  if (s == "NR" || s == "nr") return EstimatorKind::NR;
  if (s == "DR" || s == "dr") return EstimatorKind::DR;
  throw ConfigError("unknown estimator kind '" + std::string(s) + "'");
}
inline int split_count(Split s) { return static_cast<int>(s); }
inline Split parse_split(int k) {
  if (k == 2) return Split::TwoSplit;
  if (k == 3) return Split::ThreeSplit;
  throw ConfigError("split must be 2 or 3");
}

struct GConstants {
  double int3 = 0.0;  // I(l1) I(l2)
  double g1 = 0.0;    // int x^2 / ((x+l1)(x+l2))
  double g2 = 0.0;    // c int x / ((x+l1)(x+l2))
  double nr = 0.0;    // 1 - I(l1)
  double dr3 = 0.0;   // l1 l2 m(-l1) m(-l2)
  double dr2 = 0.0;   // int l1 l2 / ((x+l1)(x+l2))
};

enum class ConstantsMethod { Quadrature, MonteCarlo };

struct ConstantsSpec {
  ConstantsMethod method = ConstantsMethod::Quadrature;
  int mc_iters = 10000;
  long mc_n = 500;
  std::uint64_t mc_seed = 1;
};

struct ConstantsWithError {
  GConstants value;
  GConstants std_err;  // zero for quadrature
};

namespace detail {

inline void check_lambdas(double l1, double l2) {
  if (!(l1 > 0.0) || !(l2 > 0.0) || !std::isfinite(l1) || !std::isfinite(l2))
    throw ConfigError("lambda1 and lambda2 must be positive and finite");
}

// Integrands in a fixed order: I1, I2, g1, g2, dr2.
inline std::array<SpectralIntegrand, 5> constant_integrands(double c, double l1, double l2) {
  return {SpectralIntegrand{1, l1, 1, l2, 0, 1.0}, SpectralIntegrand{1, l2, 1, l1, 0, 1.0},
          SpectralIntegrand{2, l1, 1, l2, 1, 1.0}, SpectralIntegrand{1, l1, 1, l2, 1, c},
          SpectralIntegrand{0, l1, 1, l2, 1, l1 * l2}};
}

inline GConstants assemble(double I1, double I2, double g1, double g2, double dr2) {
  return {I1 * I2, g1, g2, 1.0 - I1, (1.0 - I1) * (1.0 - I2), dr2};
}

}  // namespace detail

inline ConstantsWithError compute_constants_with_error(const MpLaw& law, double l1, double l2,
                                                       const ConstantsSpec& spec = {}) {
  detail::check_lambdas(l1, l2);
  const auto fs = detail::constant_integrands(law.c, l1, l2);
  if (spec.method == ConstantsMethod::Quadrature) {
    std::array<double, 5> v{};
    for (std::size_t i = 0; i < fs.size(); ++i) v[i] = mp_integral(law, fs[i], 1e-10);
    return {detail::assemble(v[0], v[1], v[2], v[3], v[4]), {}};
  }
  const Eigen::MatrixXd draws =
      mc_spectral_draws(law.c, spec.mc_n, std::vector<SpectralIntegrand>(fs.begin(), fs.end()), spec.mc_iters,
                        spec.mc_seed);
  const Eigen::RowVectorXd m = draws.colwise().mean();
  const GConstants value = detail::assemble(m[0], m[1], m[2], m[3], m[4]);
  // Delta method on per-draw linearizations.
  const long R = draws.rows();
  Eigen::MatrixXd lin(R, 6);
  lin.col(0) = m[1] * draws.col(0) + m[0] * draws.col(1);
  lin.col(1) = draws.col(2);
  lin.col(2) = draws.col(3);
  lin.col(3) = -draws.col(0);
  lin.col(4) = -(1.0 - m[1]) * draws.col(0) - (1.0 - m[0]) * draws.col(1);
  lin.col(5) = draws.col(4);
  std::array<double, 6> se{};
  for (int j = 0; j < 6; ++j) {
    if (R < 2) break;
    const double mu = lin.col(j).mean();
    se[j] = std::sqrt((lin.col(j).array() - mu).square().sum() / (R - 1) / R);
  }
  return {value, {se[0], se[1], se[2], se[3], se[4], se[5]}};
}

inline GConstants compute_constants(const MpLaw& law, double l1, double l2, const ConstantsSpec& spec = {}) {
  return compute_constants_with_error(law, l1, l2, spec).value;
}

inline constexpr double kDegenerateTol = 1e-6;

// theta_db = H (base - K alpha_hat^T beta_hat); arg is the quantity inverted into H.
struct Normalizer {
  double H = 1.0;
  double K = 0.0;
  double arg = 1.0;
};

inline Normalizer normalizer(EstimatorKind kind, Split split, const GConstants& g,
                             Nr2spVariant variant = Nr2spVariant::ProofVersion) {
  Normalizer out;
  if (split == Split::ThreeSplit) {
    switch (kind) {
      case EstimatorKind::INT: out.K = 1.0 / g.int3; break;
      case EstimatorKind::NR: out.K = g.nr / g.int3; break;
      case EstimatorKind::DR: out.K = g.dr3 / g.int3; break;
    }
    return out;
  }
  switch (kind) {
    case EstimatorKind::INT:
      out.arg = 1.0 - g.g2 / g.g1;
      out.K = 1.0 / g.g1;
      break;
    case EstimatorKind::NR:
      out.arg = 1.0 - g.g2 * g.nr / g.g1;
      out.K = variant == Nr2spVariant::ProofVersion ? g.nr / g.g1 : g.g2 * g.nr / g.g1;
      break;
    case EstimatorKind::DR:
      out.arg = 1.0 + g.g2 * (1.0 - g.dr2 / g.g1);
      out.K = g.dr2 / g.g1;
      break;
  }
  if (!(std::abs(out.arg) >= kDegenerateTol))
    throw DegenerateNormalizer(std::string(to_string(kind)) + " two-split normalizer argument " +
                               std::to_string(out.arg));
  out.H = 1.0 / out.arg;
  return out;
}

inline bool is_degenerate(EstimatorKind kind, Split split, const GConstants& g,
                          Nr2spVariant variant = Nr2spVariant::ProofVersion) {
  try {
    normalizer(kind, split, g, variant);
    return false;
  } catch (const DegenerateNormalizer&) {
    return true;
  }
}

// Evaluation-split sufficient statistics for all three kinds.
struct EvalStats {
  double mean_ay = 0.0;
  double mean_nr = 0.0;  // mean y (a - x^T alpha_hat)
  double mean_dr = 0.0;  // mean (y - x^T beta_hat)(a - x^T alpha_hat)
  double ab = 0.0;       // alpha_hat^T beta_hat
};

inline EvalStats eval_stats(const Eigen::VectorXd& alpha_hat, const Eigen::VectorXd& beta_hat,
                            const DatasetView& d_eval) {
  if (d_eval.p() != alpha_hat.size() || alpha_hat.size() != beta_hat.size())
    throw SizeMismatch("coefficient length differs from evaluation columns");
  const double n = static_cast<double>(d_eval.n());
  Eigen::MatrixXd coefs(alpha_hat.size(), 2);
  coefs.col(0) = alpha_hat;
  coefs.col(1) = beta_hat;
  const Eigen::MatrixXd fitted = d_eval.X * coefs;
  const Eigen::ArrayXd ra = d_eval.a.array() - fitted.col(0).array();
  const Eigen::ArrayXd ry = d_eval.y.array() - fitted.col(1).array();
  EvalStats s;
  s.mean_ay = (d_eval.a.array() * d_eval.y.array()).sum() / n;
  s.mean_nr = (d_eval.y.array() * ra).sum() / n;
  s.mean_dr = (ry * ra).sum() / n;
  s.ab = alpha_hat.dot(beta_hat);
  return s;
}

inline double raw_from_stats(EstimatorKind kind, const EvalStats& s) {
  switch (kind) {
    case EstimatorKind::INT: return s.mean_ay - s.ab;
    case EstimatorKind::NR: return s.mean_nr;
    case EstimatorKind::DR: return s.mean_dr;
  }
  return 0.0;
}

inline double debiased_from_stats(EstimatorKind kind, const EvalStats& s, const Normalizer& h) {
  const double base = kind == EstimatorKind::INT ? s.mean_ay : raw_from_stats(kind, s);
  return h.H * (base - h.K * s.ab);
}

struct NuisanceFits {
  Eigen::VectorXd alpha_hat;
  Eigen::VectorXd beta_hat;
};

// alpha_hat on d_alpha with l1, beta_hat on d_beta with l2; a two-split call
// passes the same view twice and shares the factorization when l1 == l2.
inline NuisanceFits fit_nuisances(Split split, const DatasetView& d_alpha, const DatasetView& d_beta, double l1,
                                  double l2) {
  detail::check_lambdas(l1, l2);
  if (split == Split::TwoSplit) {
    if (d_alpha.X.data() != d_beta.X.data() || d_alpha.n() != d_beta.n())
      throw ConfigError("two-split estimators fit both nuisances on the same view");
    const RidgeSolver solver(d_alpha.X);
    if (l1 == l2) {
      auto [fa, fb] = solver.fit2(d_alpha.a, d_alpha.y, l1);
      return {std::move(fa.coef), std::move(fb.coef)};
    }
    return {solver.fit(d_alpha.a, l1).coef, solver.fit(d_alpha.y, l2).coef};
  }
  return {fit(d_alpha.X, d_alpha.a, l1).coef, fit(d_beta.X, d_beta.y, l2).coef};
}

inline double raw_estimate(EstimatorKind kind, Split split, const DatasetView& d_alpha, const DatasetView& d_beta,
                           const DatasetView& d_eval, double l1, double l2) {
  const auto nf = fit_nuisances(split, d_alpha, d_beta, l1, l2);
  return raw_from_stats(kind, eval_stats(nf.alpha_hat, nf.beta_hat, d_eval));
}

// Predicted E[raw] - theta0.
inline double asymptotic_bias(EstimatorKind kind, Split split, double varrho, double theta0, const GConstants& g) {
  if (split == Split::ThreeSplit) {
    switch (kind) {
      case EstimatorKind::INT: return varrho * (1.0 - g.int3);
      case EstimatorKind::NR: return varrho * g.nr;
      case EstimatorKind::DR: return varrho * g.dr3;
    }
  }
  switch (kind) {
    case EstimatorKind::INT: return varrho * (1.0 - g.g1) - theta0 * g.g2;
    case EstimatorKind::NR: return varrho * g.nr;
    case EstimatorKind::DR: return theta0 * g.g2 + varrho * g.dr2;
  }
  return 0.0;
}

struct DebiasPlan {
  EstimatorKind kind = EstimatorKind::INT;
  Split split = Split::ThreeSplit;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  GConstants g;
  ConstantsSpec method;
  Nr2spVariant nr2sp_variant = Nr2spVariant::ProofVersion;

  static DebiasPlan make(EstimatorKind kind, Split split, const MpLaw& law, double l1, double l2,
                         const ConstantsSpec& method = {}, Nr2spVariant variant = Nr2spVariant::ProofVersion) {
    return {kind, split, l1, l2, compute_constants(law, l1, l2, method), method, variant};
  }
  Normalizer normalizer() const { return ecc::normalizer(kind, split, g, nr2sp_variant); }
};

inline double debiased_estimate(const DebiasPlan& plan, const DatasetView& d_alpha, const DatasetView& d_beta,
                                const DatasetView& d_eval) {
  const Normalizer h = plan.normalizer();
  const auto nf = fit_nuisances(plan.split, d_alpha, d_beta, plan.lambda1, plan.lambda2);
  return debiased_from_stats(plan.kind, eval_stats(nf.alpha_hat, nf.beta_hat, d_eval), h);
}

}  // namespace ecc
