#include "ipla/blur.hpp"

#include <algorithm>
#include <cstring>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace ipla {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {
    if (ptr == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  void* ptr;
};

}  // namespace

struct CirculantBlur::Plans {
  explicit Plans(std::size_t side) : n(static_cast<int>(side)) {
    FftwBuffer real(sizeof(double) * side * side);
    FftwBuffer spec(sizeof(fftw_complex) * side * (side / 2 + 1));
    std::lock_guard<std::mutex> lock(planner_mutex());
    r2c = fftw_plan_dft_r2c_2d(n, n, static_cast<double*>(real.ptr),
                               static_cast<fftw_complex*>(spec.ptr), FFTW_ESTIMATE);
    c2r = fftw_plan_dft_c2r_2d(n, n, static_cast<fftw_complex*>(spec.ptr),
                               static_cast<double*>(real.ptr), FFTW_ESTIMATE);
  }
  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(r2c);
    fftw_destroy_plan(c2r);
  }
  int n;
  fftw_plan r2c;
  fftw_plan c2r;
};

CirculantBlur::CirculantBlur(const std::vector<double>& psf, std::size_t psf_side,
                             std::size_t side)
    : side_(side) {
  if (side == 0) throw std::invalid_argument("blur: image side must be positive");
  if (psf_side % 2 == 0 || psf.size() != psf_side * psf_side) {
    throw std::invalid_argument("blur: psf must be an odd square stencil");
  }
  if (psf_side > side) throw std::invalid_argument("blur: psf larger than the image");
  plans_ = std::make_shared<Plans>(side);
  // Wrap the centred stencil so that its middle pixel sits at the origin.
  Image kernel = Image::Zero(static_cast<Eigen::Index>(side * side));
  const auto r = static_cast<std::ptrdiff_t>(psf_side / 2);
  const auto n = static_cast<std::ptrdiff_t>(side);
  for (std::ptrdiff_t a = -r; a <= r; ++a) {
    for (std::ptrdiff_t b = -r; b <= r; ++b) {
      const double w = psf[static_cast<std::size_t>((a + r) * static_cast<std::ptrdiff_t>(psf_side) + (b + r))];
      const auto i = ((a % n) + n) % n;
      const auto j = ((b % n) + n) % n;
      kernel[i * n + j] += w;
    }
  }
  forward(kernel, transfer_);
}

CirculantBlur CirculantBlur::identity(std::size_t side) {
  return CirculantBlur(std::vector<double>{1.0}, 1, side);
}

void CirculantBlur::forward(const Image& in, std::vector<std::complex<double>>& out) const {
  require_dim(in, pixels(), "blur input");
  const std::size_t half = side_ / 2 + 1;
  FftwBuffer real(sizeof(double) * pixels());
  FftwBuffer spec(sizeof(fftw_complex) * side_ * half);
  std::memcpy(real.ptr, in.data(), sizeof(double) * pixels());
  fftw_execute_dft_r2c(plans_->r2c, static_cast<double*>(real.ptr),
                       static_cast<fftw_complex*>(spec.ptr));
  out.resize(side_ * half);
  std::memcpy(static_cast<void*>(out.data()), spec.ptr, sizeof(fftw_complex) * side_ * half);
}

Image CirculantBlur::backward(std::vector<std::complex<double>>& spectrum) const {
  const std::size_t half = side_ / 2 + 1;
  FftwBuffer real(sizeof(double) * pixels());
  FftwBuffer spec(sizeof(fftw_complex) * side_ * half);
  std::memcpy(spec.ptr, spectrum.data(), sizeof(fftw_complex) * side_ * half);
  fftw_execute_dft_c2r(plans_->c2r, static_cast<fftw_complex*>(spec.ptr),
                       static_cast<double*>(real.ptr));
  Image out(static_cast<Eigen::Index>(pixels()));
  std::memcpy(out.data(), real.ptr, sizeof(double) * pixels());
  out /= static_cast<double>(pixels());
  return out;
}

Image CirculantBlur::apply(const Image& image) const {
  std::vector<std::complex<double>> s;
  forward(image, s);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] *= transfer_[k];
  return backward(s);
}

Image CirculantBlur::adjoint(const Image& image) const {
  std::vector<std::complex<double>> s;
  forward(image, s);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] *= std::conj(transfer_[k]);
  return backward(s);
}

Image CirculantBlur::apply_shifted_gram(const Image& u, double w, double shift) const {
  std::vector<std::complex<double>> s;
  forward(u, s);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] *= w * std::norm(transfer_[k]) + shift;
  return backward(s);
}

Image CirculantBlur::solve_shifted_gram(const Image& rhs, double w, double shift) const {
  if (!(shift > 0.0)) throw std::invalid_argument("blur: gram solve needs a positive shift");
  std::vector<std::complex<double>> s;
  forward(rhs, s);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] /= w * std::norm(transfer_[k]) + shift;
  return backward(s);
}

double CirculantBlur::norm_sq() const {
  double m = 0.0;
  for (const auto& t : transfer_) m = std::max(m, std::norm(t));
  return m;
}

}  // namespace ipla
