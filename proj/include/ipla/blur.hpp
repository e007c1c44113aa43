#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "ipla/types.hpp"

namespace ipla {

/// Square image stored row-major: pixel (row i, column j) lives at i*side + j.
using Image = Point;

/// Periodic 2D convolution H with a fixed point-spread function, applied via
/// real-to-complex FFTs. Instances are immutable and safe to share between
/// threads.
class CirculantBlur {
 public:
  /// `psf` is a (2r+1)x(2r+1) row-major stencil centred on its middle pixel.
  CirculantBlur(const std::vector<double>& psf, std::size_t psf_side, std::size_t side);

  static CirculantBlur identity(std::size_t side);

  std::size_t side() const { return side_; }
  std::size_t pixels() const { return side_ * side_; }

  Image apply(const Image& image) const;
  Image adjoint(const Image& image) const;

  /// (w * H^T H + shift * I) u
  Image apply_shifted_gram(const Image& u, double w, double shift) const;
  /// Solves (w * H^T H + shift * I) u = rhs; requires shift > 0.
  Image solve_shifted_gram(const Image& rhs, double w, double shift) const;

  /// max over frequencies of |h^|^2, i.e. the squared operator norm of H.
  double norm_sq() const;

 private:
  struct Plans;

  void forward(const Image& in, std::vector<std::complex<double>>& out) const;
  Image backward(std::vector<std::complex<double>>& spectrum) const;

  std::size_t side_;
  std::vector<std::complex<double>> transfer_;  // side x (side/2 + 1)
  std::shared_ptr<const Plans> plans_;
};

}  // namespace ipla
