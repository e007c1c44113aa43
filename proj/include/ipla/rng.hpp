#pragma once

#include <cstdint>
#include <random>

#include "ipla/types.hpp"

namespace ipla {

/// splitmix64 finaliser of base + 0x9E3779B97F4A7C15 * (stream + 1).
/// Replica r of an experiment with base seed s uses mix_seed(s, r).
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

/// Deterministic, copyable generator state owned by one chain.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// Fills x with independent N(0, 1) draws, one per coordinate in order.
  void fill_normal(Point& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = normal_(engine_);
  }

  bool operator==(const RandomStream& o) const {
    return engine_ == o.engine_ && normal_ == o.normal_ && uniform_ == o.uniform_;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
};

}  // namespace ipla
