#include "ipla/potentials.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace ipla {

ConfigError::ConfigError(std::string key, const std::string& message, int line)
    : std::runtime_error(message), key_(std::move(key)), line_(line) {}

void require_dim(const Point& x, std::size_t dim, const char* what) {
  if (static_cast<std::size_t>(x.size()) != dim) {
    std::ostringstream os;
    os << what << ": expected dimension " << dim << ", got " << x.size();
    throw std::invalid_argument(os.str());
  }
}

void require_finite(const Point& x, const char* what) {
  if (!x.allFinite()) throw std::domain_error(std::string(what) + ": non-finite coordinates");
}

void validate_profile(const PotentialProfile& p) {
  if (p.dim == 0) throw std::invalid_argument("potential: dimension must be positive");
  if (!(p.q_v >= 1.0)) throw std::invalid_argument("potential: q_v must be >= 1");
  if (!(p.lambda_v >= 0.0)) throw std::invalid_argument("potential: lambda_v must be >= 0");
  if (!(p.r_v >= 0.0)) throw std::invalid_argument("potential: r_v must be >= 0");
  if (!(p.c_v > 0.0)) throw std::invalid_argument("potential: c_v must be > 0");
  if (!(p.l_q > 0.0)) throw std::invalid_argument("potential: l_q must be > 0");
  if (p.minimizer) require_dim(*p.minimizer, p.dim, "potential minimizer");
}

Potential::Potential(PotentialProfile profile) : profile_(std::move(profile)) {
  validate_profile(profile_);
}

double Potential::value(const Point& x) const {
  require_dim(x, dim(), name().c_str());
  require_finite(x, name().c_str());
  return do_value(x);
}

Point Potential::gradient(const Point& x) const {
  if (!profile_.smooth) throw UnsupportedOperation(name() + ": gradient is not available");
  require_dim(x, dim(), name().c_str());
  require_finite(x, name().c_str());
  return do_gradient(x);
}

Point Potential::hessian_vec(const Point& x, const Point& v) const {
  if (!profile_.smooth) throw UnsupportedOperation(name() + ": Hessian is not available");
  require_dim(x, dim(), name().c_str());
  require_dim(v, dim(), name().c_str());
  require_finite(x, name().c_str());
  return do_hessian_vec(x, v);
}

Point Potential::do_gradient(const Point&) const {
  throw UnsupportedOperation(name() + ": gradient is not available");
}

Point Potential::do_hessian_vec(const Point&, const Point&) const {
  throw UnsupportedOperation(name() + ": Hessian is not available");
}

// ---------------------------------------------------------------- Gaussian

namespace {

PotentialProfile gaussian_profile(std::size_t dim) {
  PotentialProfile p;
  p.dim = dim;
  p.lambda_v = 1.0;
  p.r_v = 0.0;
  p.q_v = 1.0;
  p.c_v = 0.5;  // L/2 with L = 1
  p.l_q = 1.0;
  p.minimizer = Point::Zero(static_cast<Eigen::Index>(dim));
  return p;
}

PotentialProfile quartic_profile(std::size_t dim) {
  PotentialProfile p;
  p.dim = dim;
  p.lambda_v = 1.0;
  p.r_v = 1.0;
  p.q_v = 3.0;
  p.c_v = 3.0;
  p.l_q = 3.0;
  p.minimizer = Point::Zero(static_cast<Eigen::Index>(dim));
  return p;
}

}  // namespace

GaussianPotential::GaussianPotential(std::size_t dim) : Potential(gaussian_profile(dim)) {}

double GaussianPotential::do_value(const Point& x) const { return 0.5 * x.squaredNorm(); }
Point GaussianPotential::do_gradient(const Point& x) const { return x; }
Point GaussianPotential::do_hessian_vec(const Point&, const Point& v) const { return v; }

// ----------------------------------------------------------------- Quartic

QuarticPotential::QuarticPotential(std::size_t dim) : Potential(quartic_profile(dim)) {}

double QuarticPotential::do_value(const Point& x) const {
  return 0.25 * x.array().square().square().sum();
}

Point QuarticPotential::do_gradient(const Point& x) const { return x.array().cube().matrix(); }

Point QuarticPotential::do_hessian_vec(const Point& x, const Point& v) const {
  return (3.0 * x.array().square() * v.array()).matrix();
}

// --------------------------------------------------------- Ginzburg-Landau

namespace {

PotentialProfile gl_profile(const GinzburgLandauParams& g) {
  if (g.q == 0) throw std::invalid_argument("ginzburg_landau: q must be positive");
  if (!(g.upsilon > 0.0) || !(g.varsigma > 0.0) || !(g.varkappa >= 0.0)) {
    throw std::invalid_argument("ginzburg_landau: need upsilon > 0, varsigma > 0, varkappa >= 0");
  }
  PotentialProfile p;
  p.dim = g.q * g.q * g.q;
  p.q_v = 3.0;
  // |Hessian| <= |1-u| + u*k*12 + 3*u*s*|x|^2 (lattice Laplacian norm <= 12).
  p.l_q = std::max(std::abs(1.0 - g.upsilon) + 12.0 * g.upsilon * g.varkappa,
                   3.0 * g.upsilon * g.varsigma);
  p.c_v = p.l_q;
  p.hessian_floor = std::min(0.0, 1.0 - g.upsilon);
  const double well = g.upsilon > 1.0 ? std::sqrt((g.upsilon - 1.0) / (g.upsilon * g.varsigma)) : 0.0;
  p.minimizer = Point::Constant(static_cast<Eigen::Index>(p.dim), well);
  return p;
}

}  // namespace

GinzburgLandauPotential::GinzburgLandauPotential(const GinzburgLandauParams& params)
    : Potential(gl_profile(params)), params_(params) {
  estimate_convexity_outside_ball();
}

Point GinzburgLandauPotential::laplacian(const Point& v) const {
  const std::size_t q = params_.q;
  Point out(v.size());
  for (std::size_t i = 0; i < q; ++i) {
    const std::size_t ip = (i + 1) % q, im = (i + q - 1) % q;
    for (std::size_t j = 0; j < q; ++j) {
      const std::size_t jp = (j + 1) % q, jm = (j + q - 1) % q;
      for (std::size_t k = 0; k < q; ++k) {
        const std::size_t kp = (k + 1) % q, km = (k + q - 1) % q;
        const double c = v[site(i, j, k)];
        out[site(i, j, k)] = 6.0 * c - v[site(ip, j, k)] - v[site(im, j, k)] - v[site(i, jp, k)] -
                             v[site(i, jm, k)] - v[site(i, j, kp)] - v[site(i, j, km)];
      }
    }
  }
  return out;
}

double GinzburgLandauPotential::do_value(const Point& x) const {
  const auto& g = params_;
  const std::size_t q = g.q;
  double quad = 0.0, grad = 0.0, quart = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      for (std::size_t k = 0; k < q; ++k) {
        const double c = x[site(i, j, k)];
        const double di = x[site((i + 1) % q, j, k)] - c;
        const double dj = x[site(i, (j + 1) % q, k)] - c;
        const double dk = x[site(i, j, (k + 1) % q)] - c;
        quad += c * c;
        grad += di * di + dj * dj + dk * dk;
        quart += c * c * c * c;
      }
    }
  }
  return 0.5 * (1.0 - g.upsilon) * quad + 0.5 * g.upsilon * g.varkappa * grad +
         0.25 * g.upsilon * g.varsigma * quart;
}

Point GinzburgLandauPotential::do_gradient(const Point& x) const {
  const auto& g = params_;
  return ((1.0 - g.upsilon) * x.array() + g.upsilon * g.varkappa * laplacian(x).array() +
          g.upsilon * g.varsigma * x.array().cube())
      .matrix();
}

Point GinzburgLandauPotential::do_hessian_vec(const Point& x, const Point& v) const {
  const auto& g = params_;
  return ((1.0 - g.upsilon) * v.array() + g.upsilon * g.varkappa * laplacian(v).array() +
          3.0 * g.upsilon * g.varsigma * x.array().square() * v.array())
      .matrix();
}

double GinzburgLandauPotential::min_hessian_eigenvalue(const Point& x) const {
  const auto n = static_cast<Eigen::Index>(dim());
  if (dim() <= 512) {
    Eigen::MatrixXd h(n, n);
    for (Eigen::Index c = 0; c < n; ++c) h.col(c) = do_hessian_vec(x, Point::Unit(n, c));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
  }
  const auto& g = params_;
  const double shift = std::abs(1.0 - g.upsilon) + 12.0 * g.upsilon * g.varkappa +
                       3.0 * g.upsilon * g.varsigma * x.array().square().maxCoeff();
  Point v = Point::Ones(n).normalized();
  double rayleigh = 0.0;
  for (int it = 0; it < 500; ++it) {
    Point w = shift * v - do_hessian_vec(x, v);
    rayleigh = v.dot(w);
    v = w.normalized();
  }
  return shift - rayleigh;
}

void GinzburgLandauPotential::estimate_convexity_outside_ball() {
  // Sample the smallest Hessian eigenvalue on spherical shells of growing
  // radius; R_V is the first shell from which every sampled shell is
  // strictly convex, lambda_V the smallest eigenvalue seen beyond it.
  constexpr int kShells = 10;
  constexpr int kPerShell = 8;
  const auto n = static_cast<Eigen::Index>(dim());
  std::mt19937_64 rng(0x676c2d736865ULL);
  std::normal_distribution<double> normal;
  std::array<double, kShells> radius{};
  std::array<double, kShells> lowest{};
  for (int s = 0; s < kShells; ++s) {
    radius[s] = 0.25 * std::sqrt(static_cast<double>(dim())) * std::ldexp(1.0, s);
    lowest[s] = std::numeric_limits<double>::infinity();
    for (int t = 0; t < kPerShell; ++t) {
      Point z(n);
      for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
      lowest[s] = std::min(lowest[s], min_hessian_eigenvalue(radius[s] * z.normalized()));
    }
  }
  int first = kShells;
  for (int s = kShells - 1; s >= 0 && lowest[s] > 0.0; --s) first = s;
  if (first == kShells) {
    profile_.lambda_v = 0.0;
    profile_.r_v = radius[kShells - 1];
    return;
  }
  profile_.r_v = radius[first];
  profile_.lambda_v = *std::min_element(lowest.begin() + first, lowest.end());
}

// ------------------------------------------------------------------ TV

double tv(const Image& image, std::size_t side) {
  if (side == 0 || static_cast<std::size_t>(image.size()) != side * side) {
    throw std::invalid_argument("tv: image length is not side^2");
  }
  const std::size_t n = side;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double c = image[i * n + j];
      const double dx = j + 1 < n ? image[i * n + j + 1] - c : 0.0;
      const double dy = i + 1 < n ? image[(i + 1) * n + j] - c : 0.0;
      total += std::sqrt(dx * dx + dy * dy);
    }
  }
  return total;
}

// -------------------------------------------------------- Deconvolution

namespace {

PotentialProfile deconvolution_profile(const CirculantBlur& blur, double sigma) {
  PotentialProfile p;
  p.dim = blur.pixels();
  p.q_v = 1.0;
  const double prec = std::isinf(sigma) ? 0.0 : 1.0 / (sigma * sigma);
  p.c_v = prec > 0.0 ? 0.5 * blur.norm_sq() * prec : 0.5;
  p.l_q = 2.0 * p.c_v;
  p.smooth = false;
  return p;
}

}  // namespace

DeconvolutionPotential::DeconvolutionPotential(std::shared_ptr<const CirculantBlur> blur,
                                               Image observed, double sigma, double beta)
    : Potential(deconvolution_profile(*blur, sigma)),
      blur_(std::move(blur)),
      observed_(std::move(observed)),
      sigma_(sigma),
      beta_(beta) {
  require_dim(observed_, blur_->pixels(), "deconvolution observation");
  if (!(sigma_ > 0.0)) throw std::invalid_argument("deconvolution: sigma must be positive");
  if (!(beta_ >= 0.0)) throw std::invalid_argument("deconvolution: beta must be >= 0");
}

double DeconvolutionPotential::precision() const {
  return std::isinf(sigma_) ? 0.0 : 1.0 / (sigma_ * sigma_);
}

double DeconvolutionPotential::do_value(const Point& x) const {
  double like = 0.0;
  if (precision() > 0.0) like = 0.5 * precision() * (observed_ - blur_->apply(x)).squaredNorm();
  return like + beta_ * tv(x, side());
}

}  // namespace ipla
