#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace localdim {

// Deterministic random source. All transforms are written out explicitly
// (the std:: distributions are implementation-defined, which would break the
// bit-reproducibility contract across standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  // Box-Muller; consumes two uniforms per draw.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // Normal restricted to |z| <= cutoff by redraw (the convention used by the
  // common He/Glorot initializer implementations).
  double truncated_normal(double cutoff = 2.0) {
    double z = normal();
    while (std::abs(z) > cutoff) z = normal();
    return z;
  }

  Eigen::VectorXd normal_vector(Eigen::Index dim) {
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal();
    return v;
  }

  // Uniform in the closed Euclidean ball of the given radius.
  Eigen::VectorXd ball(Eigen::Index dim, double radius) {
    Eigen::VectorXd dir = normal_vector(dim);
    double norm = dir.norm();
    if (norm == 0.0) return Eigen::VectorXd::Zero(dim);
    double r = radius * std::pow(uniform(), 1.0 / static_cast<double>(dim));
    return dir * (r / norm);
  }

  // Stable per-stream seed derivation (splitmix64 finalizer).
  static std::uint64_t derive(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace localdim
