#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ipla/samplers.hpp"

namespace ipla {

struct MomentReport {
  double moment_order = 2.0;
  double estimate = 0.0;
  double truth = 0.0;
  double re = 0.0;
  double cv = 0.0;
  std::size_t replicas = 0;
};

/// Mean of |X_k|^m over the post burn-in window of one chain; NaN if the
/// chain diverged. Orders not tracked by running sums fall back to the
/// stored samples.
double moment_estimate(const ChainTrace& trace, double m);

/// Cross-replica summary: estimate is the replica mean, re = |est - truth|/|truth|,
/// cv = sample sd (R - 1 denominator) / |truth|. NaN replicas propagate.
MomentReport aggregate(const std::vector<double>& estimates, double truth, double m);

/// E[Y^k] for the one-dimensional density proportional to exp(-y^4/4).
double quartic_coordinate_moment(int k);

/// E|Y|^m under the Gaussian or separable quartic target in dimension d.
/// Throws std::invalid_argument for unsupported pairs; use a long
/// Metropolis-Hastings run instead.
double oracle_moment(const std::string& potential, std::size_t d, double m);

/// Per-pixel empirical quantile with linear interpolation between order
/// statistics (R type 7).
Image quantile_image(const std::vector<Image>& samples, double q);

}  // namespace ipla
