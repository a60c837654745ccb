#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace bevllm {

/// Seeded RNG used everywhere parameters or data are drawn. Draw order is
/// part of the determinism contract: identical seeds reproduce identical
/// matrices on the same platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  std::uint64_t integer(std::uint64_t n) {  // uniform in [0, n)
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        m(r, c) = normal(0.0, stddev);
      }
    }
    return m;
  }

  std::uint64_t fork() { return engine_(); }  // derive a child seed

 private:
  std::mt19937_64 engine_;
};

}  // namespace bevllm
