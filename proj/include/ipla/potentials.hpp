#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "ipla/blur.hpp"
#include "ipla/types.hpp"

namespace ipla {

/// Growth and convexity metadata of a potential V, as used by the step-size
/// heuristics and by the theory-constant calculators.
struct PotentialProfile {
  std::size_t dim = 0;
  double lambda_v = 0.0;  // strong-convexity modulus outside the ball B(0, r_v)
  double r_v = 0.0;
  double q_v = 1.0;       // V grows like |x|^(q_v + 1)
  double c_v = 1.0;
  double l_q = 1.0;
  // Global lower bound on the spectrum of the Hessian. Zero for convex
  // potentials; negative when V is only weakly convex.
  double hessian_floor = 0.0;
  bool smooth = true;
  std::optional<Point> minimizer;
};

void validate_profile(const PotentialProfile& p);

/// Negative log-density of a target measure. All evaluations are pure.
class Potential {
 public:
  virtual ~Potential() = default;

  virtual std::string name() const = 0;

  const PotentialProfile& profile() const { return profile_; }
  std::size_t dim() const { return profile_.dim; }

  double value(const Point& x) const;
  Point gradient(const Point& x) const;
  Point hessian_vec(const Point& x, const Point& v) const;

 protected:
  explicit Potential(PotentialProfile profile);

  virtual double do_value(const Point& x) const = 0;
  virtual Point do_gradient(const Point& x) const;
  virtual Point do_hessian_vec(const Point& x, const Point& v) const;

  PotentialProfile profile_;
};

/// V(x) = |x|^2 / 2.
class GaussianPotential final : public Potential {
 public:
  explicit GaussianPotential(std::size_t dim);
  std::string name() const override { return "gaussian"; }

 protected:
  double do_value(const Point& x) const override;
  Point do_gradient(const Point& x) const override;
  Point do_hessian_vec(const Point& x, const Point& v) const override;
};

/// Separable light-tailed potential V(x) = sum_i x_i^4 / 4.
class QuarticPotential final : public Potential {
 public:
  explicit QuarticPotential(std::size_t dim);
  std::string name() const override { return "quartic"; }

 protected:
  double do_value(const Point& x) const override;
  Point do_gradient(const Point& x) const override;
  Point do_hessian_vec(const Point& x, const Point& v) const override;
};

struct GinzburgLandauParams {
  double varkappa = 0.1;
  double varsigma = 0.5;
  double upsilon = 2.0;
  std::size_t q = 5;  // lattice side; dimension is q^3
};

/// Lattice Ginzburg--Landau potential on a periodic q x q x q grid:
///   sum_s (1-u)/2 x_s^2 + u*k/2 |forward differences at s|^2 + u*s/4 x_s^4.
/// Site (i, j, k) is stored at (i*q + j)*q + k.
class GinzburgLandauPotential final : public Potential {
 public:
  explicit GinzburgLandauPotential(const GinzburgLandauParams& params = {});
  std::string name() const override { return "ginzburg_landau"; }
  const GinzburgLandauParams& params() const { return params_; }

  /// Smallest eigenvalue of the Hessian at x (dense for small lattices,
  /// shifted power iteration otherwise).
  double min_hessian_eigenvalue(const Point& x) const;

 protected:
  double do_value(const Point& x) const override;
  Point do_gradient(const Point& x) const override;
  Point do_hessian_vec(const Point& x, const Point& v) const override;

 private:
  std::size_t site(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * params_.q + j) * params_.q + k;
  }
  // Sum over the three lattice directions of (2 v_s - v_{s+} - v_{s-}).
  Point laplacian(const Point& v) const;
  void estimate_convexity_outside_ball();

  GinzburgLandauParams params_;
};

/// Discrete isotropic total variation of a side x side image: forward
/// differences with the isotropic norm in the interior and one-sided
/// absolute differences along the last row and last column.
double tv(const Image& image, std::size_t side);

/// Posterior potential of the Bayesian deconvolution problem
///   V(x) = |y - Hx|^2 / (2 sigma^2) + beta * TV(x).
/// Non-smooth: only value() is available. sigma = +inf switches the
/// likelihood off.
class DeconvolutionPotential final : public Potential {
 public:
  DeconvolutionPotential(std::shared_ptr<const CirculantBlur> blur, Image observed, double sigma,
                         double beta);
  std::string name() const override { return "deconvolution"; }

  const CirculantBlur& blur() const { return *blur_; }
  const Image& observed() const { return observed_; }
  double sigma() const { return sigma_; }
  double beta() const { return beta_; }
  std::size_t side() const { return blur_->side(); }
  /// 1 / sigma^2, zero when the likelihood is off.
  double precision() const;

 protected:
  double do_value(const Point& x) const override;

 private:
  std::shared_ptr<const CirculantBlur> blur_;
  Image observed_;
  double sigma_;
  double beta_;
};

}  // namespace ipla
