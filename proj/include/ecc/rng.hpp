#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>
#include <boost/random/normal_distribution.hpp>

namespace ecc {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for the substream identified by (seed, keys...). Distinct key tuples
// give statistically independent engines; the mapping never depends on
// scheduling, so parallel callers reproduce serial output.
inline std::uint64_t substream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k + 0x3c6ef372fe94f82bULL));
  return h;
}

inline Engine substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  return Engine(substream_seed(seed, keys));
}

// Ziggurat normals; identical sequence on every platform for a given engine.
class NormalSource {
 public:
  explicit NormalSource(Engine& eng) : eng_(eng) {}
  double operator()() { return dist_(eng_); }

  // Column-major fill order.
  void fill_matrix(Eigen::Ref<Eigen::MatrixXd> m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist_(eng_);
  }
  void fill_vector(Eigen::Ref<Eigen::VectorXd> v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist_(eng_);
  }

 private:
  Engine& eng_;
  boost::random::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace ecc
