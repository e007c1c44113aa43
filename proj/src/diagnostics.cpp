#include "ipla/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace ipla {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double moment_estimate(const ChainTrace& trace, double m) {
  if (trace.diverged_at) return kNaN;
  for (std::size_t j = 0; j < trace.moment_orders.size(); ++j) {
    if (trace.moment_orders[j] == m) {
      if (trace.count == 0) throw std::invalid_argument("moment_estimate: empty post burn-in window");
      return trace.moment_sums[j].value() / static_cast<double>(trace.count);
    }
  }
  if (trace.samples.empty()) {
    throw std::invalid_argument("moment_estimate: order not tracked and no samples stored");
  }
  CompensatedSum sum;
  for (const auto& x : trace.samples) sum.add(std::pow(x.squaredNorm(), 0.5 * m));
  return sum.value() / static_cast<double>(trace.samples.size());
}

MomentReport aggregate(const std::vector<double>& estimates, double truth, double m) {
  if (estimates.empty()) throw std::invalid_argument("aggregate: no replicas");
  if (truth == 0.0 || !std::isfinite(truth)) {
    throw std::invalid_argument("aggregate: truth must be finite and non-zero");
  }
  MomentReport r;
  r.moment_order = m;
  r.truth = truth;
  r.replicas = estimates.size();
  CompensatedSum sum;
  for (double e : estimates) sum.add(e);
  const double n = static_cast<double>(estimates.size());
  r.estimate = sum.value() / n;
  r.re = std::abs(r.estimate - truth) / std::abs(truth);
  if (estimates.size() < 2) {
    r.cv = kNaN;
  } else {
    CompensatedSum sq;
    for (double e : estimates) sq.add((e - r.estimate) * (e - r.estimate));
    r.cv = std::sqrt(sq.value() / (n - 1.0)) / std::abs(truth);
  }
  if (!std::isfinite(r.estimate)) r.re = r.cv = kNaN;
  return r;
}

double quartic_coordinate_moment(int k) {
  if (k < 0) throw std::invalid_argument("quartic moment: order must be >= 0");
  if (k % 2 == 1) return 0.0;
  if (k == 0) return 1.0;
  // E|Y|^k = 4^(k/4) Gamma((k+1)/4) / Gamma(1/4) for density ~ exp(-y^4/4).
  const double kk = static_cast<double>(k);
  return std::pow(4.0, 0.25 * kk) * boost::math::tgamma(0.25 * (kk + 1.0)) / boost::math::tgamma(0.25);
}

double oracle_moment(const std::string& potential, std::size_t d, double m) {
  if (d == 0) throw std::invalid_argument("oracle_moment: dimension must be positive");
  const double dd = static_cast<double>(d);
  const bool even = m > 0.0 && std::floor(m / 2.0) * 2.0 == m;
  if (potential == "gaussian" && even) {
    double out = 1.0;
    for (int j = 0; j < static_cast<int>(m / 2.0); ++j) out *= dd + 2.0 * j;
    return out;
  }
  if (potential == "quartic" && (m == 2.0 || m == 4.0 || m == 6.0)) {
    const double c2 = quartic_coordinate_moment(2);
    const double c4 = quartic_coordinate_moment(4);
    if (m == 2.0) return dd * c2;
    if (m == 4.0) return dd * c4 + dd * (dd - 1.0) * c2 * c2;
    const double c6 = quartic_coordinate_moment(6);
    return dd * c6 + 3.0 * dd * (dd - 1.0) * c4 * c2 + dd * (dd - 1.0) * (dd - 2.0) * c2 * c2 * c2;
  }
  throw std::invalid_argument("no analytic oracle for potential '" + potential + "' at moment order " +
                              std::to_string(m) + "; use a long Metropolis-Hastings reference run");
}

Image quantile_image(const std::vector<Image>& samples, double q) {
  if (samples.empty()) throw std::invalid_argument("quantile_image: no samples");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile_image: q must lie in (0, 1)");
  const Eigen::Index n = samples.front().size();
  for (const auto& s : samples) require_dim(s, static_cast<std::size_t>(n), "quantile_image sample");
  const std::size_t count = samples.size();
  const double h = (static_cast<double>(count) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  Image out(n);
  std::vector<double> column(count);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < count; ++k) column[k] = samples[k][i];
    std::sort(column.begin(), column.end());
    const double a = column[lo];
    const double b = column[std::min(lo + 1, count - 1)];
    out[i] = a + frac * (b - a);
  }
  return out;
}

}  // namespace ipla
