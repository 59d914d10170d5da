#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecc/errors.hpp"
#include "ecc/rng.hpp"

namespace ecc {

struct ModelParams {
  Eigen::VectorXd alpha0;
  Eigen::VectorXd beta0;
  double rho = 0.0;

  long p() const { return alpha0.size(); }
  void validate() const {
    require(alpha0.size() == beta0.size() && alpha0.size() >= 1, "alpha0 and beta0 must share a positive length");
    require(alpha0.allFinite() && beta0.allFinite(), "coefficients must be finite");
    require(std::abs(rho) <= 1.0, "rho must lie in [-1, 1]");
  }
};

struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd a;
  Eigen::VectorXd y;

  long n() const { return X.rows(); }
  long p() const { return X.cols(); }
};

// Non-owning row block of a Dataset.
struct DatasetView {
  Eigen::Ref<const Eigen::MatrixXd> X;
  Eigen::Ref<const Eigen::VectorXd> a;
  Eigen::Ref<const Eigen::VectorXd> y;

  DatasetView(const Dataset& d) : X(d.X), a(d.a), y(d.y) {}
  DatasetView(Eigen::Ref<const Eigen::MatrixXd> X_, Eigen::Ref<const Eigen::VectorXd> a_,
              Eigen::Ref<const Eigen::VectorXd> y_)
      : X(X_), a(a_), y(y_) {}

  long n() const { return X.rows(); }
  long p() const { return X.cols(); }
};

enum class SplitStrategy { TwoSplit = 2, ThreeSplit = 3 };

struct SplitLayout {
  SplitStrategy strategy = SplitStrategy::ThreeSplit;
  std::vector<long> sizes;

  static SplitLayout uniform(SplitStrategy s, long n_per_split) {
    return {s, std::vector<long>(static_cast<std::size_t>(s), n_per_split)};
  }
  long total() const {
    long t = 0;
    for (auto s : sizes) t += s;
    return t;
  }
  void validate() const {
    require(sizes.size() == static_cast<std::size_t>(strategy), "layout size count must match the split strategy");
    for (auto s : sizes) require(s >= 1, "every split needs at least one row");
  }
};

enum class CoeffStyle { ExactGram, UniformRescaled };

// ExactGram: alpha0 = u e1, beta0 = (varrho/u) e1 + sqrt(v^2 - varrho^2/u^2) e2.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> make_coefficients(long p, double u, double v, double varrho,
                                                                     CoeffStyle style, std::uint64_t seed) {
  require(u > 0.0 && v > 0.0, "u and v must be positive");
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(p), beta = Eigen::VectorXd::Zero(p);
  if (style == CoeffStyle::ExactGram) {
    require(p >= 2, "ExactGram needs p >= 2");
    if (std::abs(varrho) > u * v) throw CauchySchwarzViolation("|varrho| > u v");
    alpha[0] = u;
    const double along = varrho / u;
    beta[0] = along;
    beta[1] = std::sqrt(std::max(0.0, v * v - along * along));
    return {alpha, beta};
  }
  require(p >= 1, "p must be >= 1");
  Engine eng = substream(seed, {0xC0EFULL});
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (long i = 0; i < p; ++i) alpha[i] = unif(eng);
  for (long i = 0; i < p; ++i) beta[i] = unif(eng);
  alpha *= u / alpha.norm();
  beta *= v / beta.norm();
  return {alpha, beta};
}

// Rows (x_i, a_i, y_i) with a = X alpha0 + eps, y = X beta0 + mu, corr(eps, mu) = rho.
inline Dataset generate(const ModelParams& params, long n, std::uint64_t seed) {
  params.validate();
  require(n >= 1, "n must be >= 1");
  Engine eng(seed);
  NormalSource z(eng);
  Dataset d;
  d.X.resize(n, params.p());
  z.fill_matrix(d.X);
  Eigen::VectorXd e1(n), e2(n);
  z.fill_vector(e1);
  z.fill_vector(e2);
  const double s = std::sqrt(std::max(0.0, 1.0 - params.rho * params.rho));
  d.a = d.X * params.alpha0 + e1;
  d.y = d.X * params.beta0 + (params.rho * e1 + s * e2);
  return d;
}

// Contiguous, disjoint views in generation order.
inline std::vector<DatasetView> split(const Dataset& data, const SplitLayout& layout) {
  layout.validate();
  if (layout.total() > data.n()) throw SizeMismatch("split sizes exceed the sample size");
  std::vector<DatasetView> views;
  long start = 0;
  for (long s : layout.sizes) {
    views.emplace_back(data.X.middleRows(start, s), data.a.segment(start, s), data.y.segment(start, s));
    start += s;
  }
  return views;
}

// Header: int64 n, int64 p, double rho, uint64 seed; then rows of (x_1..x_p, a, y)
// as row-major float64.
inline void dump_binary(const Dataset& d, double rho, std::uint64_t seed, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path);
  const std::int64_t n = d.n(), p = d.p();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&p), sizeof p);
  out.write(reinterpret_cast<const char*>(&rho), sizeof rho);
  out.write(reinterpret_cast<const char*>(&seed), sizeof seed);
  std::vector<double> row(static_cast<std::size_t>(p + 2));
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < p; ++j) row[j] = d.X(i, j);
    row[p] = d.a[i];
    row[p + 1] = d.y[i];
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
}

struct BinaryDump {
  Dataset data;
  double rho = 0.0;
  std::uint64_t seed = 0;
};

inline BinaryDump load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::int64_t n = 0, p = 0;
  BinaryDump out;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&p), sizeof p);
  in.read(reinterpret_cast<char*>(&out.rho), sizeof out.rho);
  in.read(reinterpret_cast<char*>(&out.seed), sizeof out.seed);
  if (!in || n < 0 || p < 0) throw ConfigError("bad dump header in " + path);
  out.data.X.resize(n, p);
  out.data.a.resize(n);
  out.data.y.resize(n);
  std::vector<double> row(static_cast<std::size_t>(p + 2));
  for (std::int64_t i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) throw ConfigError("truncated dump " + path);
    for (std::int64_t j = 0; j < p; ++j) out.data.X(i, j) = row[j];
    out.data.a[i] = row[p];
    out.data.y[i] = row[p + 1];
  }
  return out;
}

}  // namespace ecc
