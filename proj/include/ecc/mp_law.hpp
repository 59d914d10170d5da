#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "ecc/errors.hpp"
#include "ecc/rng.hpp"

namespace ecc {

// Limiting spectral law of X^T X / n for p/n -> c.
struct MpLaw {
  double c = 1.0;
  double edge_lo = 0.0;
  double edge_hi = 4.0;
  double atom_mass = 0.0;

  MpLaw() = default;
  explicit MpLaw(double c_) : c(c_) {
    if (!(c_ > 0.0) || !std::isfinite(c_)) throw ConfigError("aspect ratio c must be positive and finite");
    const double s = std::sqrt(c_);
    edge_lo = (1.0 - s) * (1.0 - s);
    edge_hi = (1.0 + s) * (1.0 + s);
    atom_mass = c_ > 1.0 ? 1.0 - 1.0 / c_ : 0.0;
  }

  static MpLaw from_dims(long p, long n) {
    if (p < 1 || n < 1) throw DimensionError("need p >= 1 and n >= 1");
    return MpLaw(static_cast<double>(p) / static_cast<double>(n));
  }

  double continuous_mass() const { return std::min(1.0, 1.0 / c); }

  double density(double x) const {
    if (x <= edge_lo || x >= edge_hi) return 0.0;
    return std::sqrt((edge_hi - x) * (x - edge_lo)) / (2.0 * std::numbers::pi * c * x);
  }
};

// prefactor * x^a / ((x + lam1)^b (x + lam2)^d)
struct SpectralIntegrand {
  int a = 0;
  double lam1 = 0.0;
  int b = 0;
  double lam2 = 0.0;
  int d = 0;
  double prefactor = 1.0;

  double denom(double x) const {
    double den = 1.0;
    for (int i = 0; i < b; ++i) den *= x + lam1;
    for (int i = 0; i < d; ++i) den *= x + lam2;
    return den;
  }
  double operator()(double x) const { return prefactor * std::pow(x, a) / denom(x); }
  // f(x)/x, finite at x -> 0 whenever a >= 1.
  double over_x(double x) const {
    if (a >= 1) return prefactor * std::pow(x, a - 1) / denom(x);
    return prefactor / (x * denom(x));
  }
  double at_zero() const {
    if (a >= 1) return 0.0;
    const double den = denom(0.0);
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    return prefactor / den;
  }
};

// Finite sum of integrands sharing the pole pair (lam1, lam2).
struct SpectralSum {
  double lam1 = 0.0;
  double lam2 = 0.0;
  std::vector<SpectralIntegrand> terms;

  SpectralSum() = default;
  SpectralSum(double l1, double l2) : lam1(l1), lam2(l2) {}
  SpectralSum(const SpectralIntegrand& f) : lam1(f.lam1), lam2(f.lam2), terms{f} {}

  static SpectralSum term(double l1, double l2, double coef, int a, int b, int d) {
    SpectralSum s(l1, l2);
    s.terms.push_back({a, l1, b, l2, d, coef});
    return s;
  }

  double operator()(double x) const {
    double s = 0.0;
    for (const auto& t : terms) s += t(x);
    return s;
  }
  double over_x(double x) const {
    double s = 0.0;
    for (const auto& t : terms) s += t.over_x(x);
    return s;
  }
  double at_zero() const {
    double s = 0.0;
    for (const auto& t : terms) s += t.at_zero();
    return s;
  }

  SpectralSum& operator+=(const SpectralSum& o) {
    check_poles(o);
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
  }
  friend SpectralSum operator+(SpectralSum l, const SpectralSum& r) { return l += r; }
  friend SpectralSum operator*(double k, SpectralSum s) {
    for (auto& t : s.terms) t.prefactor *= k;
    return s;
  }
  friend SpectralSum operator-(SpectralSum l, const SpectralSum& r) { return l += (-1.0) * r; }
  friend SpectralSum operator*(const SpectralSum& l, const SpectralSum& r) {
    l.check_poles(r);
    SpectralSum out(l.lam1, l.lam2);
    for (const auto& x : l.terms)
      for (const auto& y : r.terms)
        out.terms.push_back({x.a + y.a, l.lam1, x.b + y.b, l.lam2, x.d + y.d, x.prefactor * y.prefactor});
    return out;
  }

 private:
  void check_poles(const SpectralSum& o) const {
    if (terms.empty() || o.terms.empty()) return;
    if (o.lam1 != lam1 || o.lam2 != lam2) throw InvariantViolation("SpectralSum pole mismatch");
  }
};

inline constexpr double kDefaultRelTol = 1e-10;

namespace detail {

// Continuous part via x = lo + (hi - lo) sin^2(phi), phi in [0, pi/2]; this is
// x = m + r sin(theta) with theta = 2 phi - pi/2, which cancels both square-root
// edge factors of the density.
template <class F>
double mp_continuous(const MpLaw& law, const F& f, double rel_tol) {
  const double lo = law.edge_lo;
  const double w = law.edge_hi - law.edge_lo;
  const double k = w * w / (std::numbers::pi * law.c);
  auto h = [&](double phi) {
    const double s = std::sin(phi), co = std::cos(phi);
    const double s2 = s * s;
    const double x = lo + w * s2;
    return k * f.over_x(x) * s2 * co * co;
  };
  using Rule = boost::math::quadrature::gauss<double, 20>;
  const double half_pi = 0.5 * std::numbers::pi;
  auto composite = [&](int panels, double* l1) {
    double sum = 0.0, abs_sum = 0.0;
    const double hstep = half_pi / panels;
    for (int i = 0; i < panels; ++i) {
      double l1_i = 0.0;
      sum += Rule::integrate(h, i * hstep, (i + 1) * hstep, &l1_i);
      abs_sum += l1_i;
    }
    *l1 = abs_sum;
    return sum;
  };
  double l1 = 0.0;
  double prev = composite(2, &l1);
  for (int panels = 4; panels <= (1 << 15); panels *= 2) {
    const double cur = composite(panels, &l1);
    if (!std::isfinite(cur)) throw QuadratureFailure("non-finite integrand value");
    const double scale = std::max(std::abs(cur), 1e-6 * l1);
    const double change = std::abs(cur - prev);
    if (change <= rel_tol * scale || change <= 64.0 * std::numeric_limits<double>::epsilon() * l1) return cur;
    prev = cur;
  }
  throw QuadratureFailure("tolerance not reached within 2^15 panels");
}

}  // namespace detail

// atom_mass * f(0) + integral of f against the continuous density.
template <class F>
double mp_integral(const MpLaw& law, const F& f, double rel_tol = kDefaultRelTol) {
  if (!(rel_tol > 0.0)) throw ConfigError("rel_tol must be positive");
  double atom = 0.0;
  if (law.atom_mass > 0.0) {
    const double f0 = f.at_zero();
    if (!std::isfinite(f0)) throw NonIntegrable("integrand infinite at 0 while the law has an atom there");
    atom = law.atom_mass * f0;
  }
  return atom + detail::mp_continuous(law, f, rel_tol);
}

// m(-lam) = integral of 1/(x + lam).
inline double stieltjes(const MpLaw& law, double lam) {
  if (!(lam > 0.0)) throw ConfigError("stieltjes needs lam > 0");
  return mp_integral(law, SpectralIntegrand{0, lam, 1, 0.0, 0, 1.0});
}

// I(lam) = integral of x/(x + lam).
inline double resolvent_mass(const MpLaw& law, double lam) {
  return mp_integral(law, SpectralIntegrand{1, lam, 1, 0.0, 0, 1.0});
}

template <class F>
double var_F(const MpLaw& law, const F& f) {
  const SpectralSum s(f);
  const double m = mp_integral(law, s);
  return mp_integral(law, s * s) - m * m;
}

template <class F, class G>
double cov_F(const MpLaw& law, const F& f, const G& g) {
  const SpectralSum sf(f), sg(g);
  return mp_integral(law, sf * sg) - mp_integral(law, sf) * mp_integral(law, sg);
}

// Eigenvalues of X^T X / n for an n x p standard normal X (p of them, zeros
// padded when p > n).
inline Eigen::VectorXd wishart_eigenvalues(long p, long n, Engine& eng) {
  Eigen::MatrixXd X(n, p);
  NormalSource(eng).fill_matrix(X);
  const long k = std::min(p, n);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(k, k);
  if (p <= n)
    G.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), 1.0 / n);
  else
    G.selfadjointView<Eigen::Lower>().rankUpdate(X, 1.0 / n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  Eigen::VectorXd ev = Eigen::VectorXd::Zero(p);
  ev.head(k) = es.eigenvalues().cwiseMax(0.0);
  return ev;
}

struct OracleResult {
  double mean = 0.0;
  double std_err = 0.0;
};

inline long oracle_dimension(double c, long n) {
  if (n < 10) throw DimensionError("oracle needs n >= 10");
  const long p = std::lround(c * static_cast<double>(n));
  if (p < 1) throw DimensionError("p = round(c n) must be >= 1");
  return p;
}

// Per-draw values of (1/p) sum_j f(lambda_hat_j); one row per draw, one column per integrand.
template <class F>
Eigen::MatrixXd mc_spectral_draws(double c, long n, const std::vector<F>& fs, int draws, std::uint64_t seed) {
  if (draws < 1) throw ConfigError("draws must be >= 1");
  const long p = oracle_dimension(c, n);
  const std::size_t m = fs.size();
  Eigen::MatrixXd vals(draws, m);
  for (int r = 0; r < draws; ++r) {
    Engine eng = substream(seed, {static_cast<std::uint64_t>(r)});
    const Eigen::VectorXd ev = wishart_eigenvalues(p, n, eng);
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (long i = 0; i < p; ++i) acc += fs[j](ev[i]);
      vals(r, j) = acc / static_cast<double>(p);
    }
  }
  return vals;
}

template <class F>
std::vector<OracleResult> mc_spectral_oracle_many(double c, long n, const std::vector<F>& fs, int draws,
                                                  std::uint64_t seed) {
  const Eigen::MatrixXd vals = mc_spectral_draws(c, n, fs, draws, seed);
  const std::size_t m = fs.size();
  std::vector<OracleResult> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double mean = vals.col(j).mean();
    double se = 0.0;
    if (draws > 1) se = std::sqrt((vals.col(j).array() - mean).square().sum() / (draws - 1) / draws);
    out[j] = {mean, se};
  }
  return out;
}

template <class F>
OracleResult mc_spectral_oracle(double c, long n, const F& f, int draws, std::uint64_t seed) {
  return mc_spectral_oracle_many(c, n, std::vector<F>{f}, draws, seed).front();
}

}  // namespace ecc
