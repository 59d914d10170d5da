#pragma once

#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "ecc/errors.hpp"
#include "ecc/mp_law.hpp"

namespace ecc {

struct RidgeFit {
  double lambda = 0.0;
  Eigen::VectorXd coef;
};

// Factorizes the smaller Gram matrix once per lambda; several targets may share
// one factorization. Uses the dual system when p > n.
class RidgeSolver {
 public:
  explicit RidgeSolver(Eigen::Ref<const Eigen::MatrixXd> X) : X_(X) {
    if (X.rows() < 1 || X.cols() < 1) throw DimensionError("ridge needs n, p >= 1");
    if (!X.allFinite()) throw SolveFailure("non-finite design matrix");
    const long n = X.rows(), p = X.cols();
    dual_ = p > n;
    const long k = dual_ ? n : p;
    gram_ = Eigen::MatrixXd::Zero(k, k);
    if (dual_)
      gram_.selfadjointView<Eigen::Lower>().rankUpdate(X, 1.0 / n);
    else
      gram_.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), 1.0 / n);
  }

  bool dual() const { return dual_; }

  RidgeFit fit(Eigen::Ref<const Eigen::VectorXd> target, double lambda) const {
    Eigen::MatrixXd t = target;
    return {lambda, solve(t, lambda).col(0)};
  }

  std::pair<RidgeFit, RidgeFit> fit2(Eigen::Ref<const Eigen::VectorXd> t1, Eigen::Ref<const Eigen::VectorXd> t2,
                                     double lambda) const {
    Eigen::MatrixXd t(t1.size(), 2);
    t.col(0) = t1;
    t.col(1) = t2;
    const Eigen::MatrixXd c = solve(t, lambda);
    return {{lambda, c.col(0)}, {lambda, c.col(1)}};
  }

 private:
  Eigen::MatrixXd solve(const Eigen::MatrixXd& targets, double lambda) const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("ridge lambda must be positive");
    if (targets.rows() != X_.rows()) throw SizeMismatch("target length differs from row count");
    if (!targets.allFinite()) throw SolveFailure("non-finite target");
    const double n = static_cast<double>(X_.rows());
    Eigen::MatrixXd A = gram_;
    A.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(A);
    if (llt.info() != Eigen::Success) throw SolveFailure("Cholesky factorization failed");
    const Eigen::MatrixXd rhs = X_.transpose() * targets / n;
    Eigen::MatrixXd coef;
    if (dual_)
      coef = X_.transpose() * llt.solve(targets) / n;
    else
      coef = llt.solve(rhs);
    // (Sigma_hat + lambda I) coef = X^T t / n
    const Eigen::MatrixXd resid = X_.transpose() * (X_ * coef) / n + lambda * coef - rhs;
    for (Eigen::Index j = 0; j < coef.cols(); ++j) {
      const double scale = rhs.col(j).norm();
      if (!(resid.col(j).norm() <= 1e-8 * scale + 1e-300)) throw SolveFailure("ridge residual check failed");
    }
    return coef;
  }

  Eigen::Ref<const Eigen::MatrixXd> X_;
  Eigen::MatrixXd gram_;
  bool dual_ = false;
};

inline RidgeFit fit(Eigen::Ref<const Eigen::MatrixXd> X, Eigen::Ref<const Eigen::VectorXd> target, double lambda) {
  return RidgeSolver(X).fit(target, lambda);
}

// Squared estimation error ||coef(lambda) - truth||^2 along the whole ridge path
// from one eigendecomposition.
class RidgePath {
 public:
  RidgePath(Eigen::Ref<const Eigen::MatrixXd> X, Eigen::Ref<const Eigen::VectorXd> target,
            Eigen::Ref<const Eigen::VectorXd> truth) {
    const long n = X.rows(), p = X.cols();
    dual_ = p > n;
    const long k = dual_ ? n : p;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(k, k);
    if (dual_)
      G.selfadjointView<Eigen::Lower>().rankUpdate(X, 1.0 / n);
    else
      G.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), 1.0 / n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    if (es.info() != Eigen::Success) throw SolveFailure("eigendecomposition failed");
    d_ = es.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXd& V = es.eigenvectors();
    truth_sq_ = truth.squaredNorm();
    if (dual_) {
      h_ = V.transpose() * target;
      m_ = V.transpose() * (X * truth) / static_cast<double>(n);
      n_ = static_cast<double>(n);
    } else {
      h_ = V.transpose() * (X.transpose() * target) / static_cast<double>(n);
      m_ = V.transpose() * truth;
    }
  }

  double squared_error(double lambda) const {
    if (!(lambda > 0.0)) throw ConfigError("ridge lambda must be positive");
    const Eigen::ArrayXd inv = 1.0 / (d_.array() + lambda);
    if (!dual_) return (h_.array() * inv - m_.array()).square().sum();
    const double coef_sq = (d_.array() * h_.array().square() * inv.square()).sum() / n_;
    const double cross = (h_.array() * m_.array() * inv).sum();
    return std::max(0.0, coef_sq - 2.0 * cross + truth_sq_);
  }

 private:
  bool dual_ = false;
  double n_ = 1.0;
  double truth_sq_ = 0.0;
  Eigen::VectorXd d_, h_, m_;
};

inline double prediction_mse_theory(const MpLaw& law, double u, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  const double l2 = lambda * lambda;
  return u * u * mp_integral(law, SpectralIntegrand{0, lambda, 2, 0.0, 0, l2}) +
         law.c * mp_integral(law, SpectralIntegrand{1, lambda, 2, 0.0, 0, 1.0});
}

inline double prediction_optimal_lambda(const MpLaw& law, double u) {
  if (!(u > 0.0)) throw ConfigError("u must be positive");
  return law.c / (u * u);
}

}  // namespace ecc
