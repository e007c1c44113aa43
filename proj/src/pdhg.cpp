#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ipla/prox.hpp"

namespace ipla {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void project_dual(Point& p, std::size_t pixels, double beta) {
  const auto n = static_cast<Eigen::Index>(pixels);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double m = std::sqrt(p[k] * p[k] + p[n + k] * p[n + k]);
    if (m > beta) {
      const double s = beta > 0.0 ? beta / m : 0.0;
      p[k] *= s;
      p[n + k] *= s;
    }
  }
}

class TvProxProblem {
 public:
  TvProxProblem(const ProxRequest& req, const DeconvolutionPotential& v)
      : v_(v), x_(req.x), tau_(req.tau), side_(v.side()), prec_(v.precision()), beta_(v.beta()) {
    b_ = x_ / tau_;
    if (prec_ > 0.0) b_ += prec_ * v.blur().adjoint(v.observed());
  }

  // (prec H^T H + shift I)^{-1} rhs
  Image solve(const Image& rhs, double shift) const {
    if (prec_ > 0.0) return v_.blur().solve_shifted_gram(rhs, prec_, shift);
    return rhs / shift;
  }

  Image apply_a(const Image& u) const {
    if (prec_ > 0.0) return v_.blur().apply_shifted_gram(u, prec_, 1.0 / tau_);
    return u / tau_;
  }

  const Image& b() const { return b_; }

  // Minimiser of the Lagrangian in u for a fixed dual point.
  Image primal_from_dual(const Point& kt_p) const { return solve(b_ - kt_p, 1.0 / tau_); }

  // Duality gap between u and p, bounded above including rounding, turned
  // into a distance by (1/tau)-strong convexity.
  double certified_distance(const Image& u, const Point& p, const Point& kt_p) const {
    const Point ku = image_gradient(u, side_);
    const auto n = static_cast<Eigen::Index>(side_ * side_);
    double tv_gap = 0.0, scale = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double g = std::sqrt(ku[k] * ku[k] + ku[n + k] * ku[n + k]);
      const double inner = p[k] * ku[k] + p[n + k] * ku[n + k];
      tv_gap += std::max(0.0, beta_ * g - inner);
      scale += beta_ * g + std::abs(inner);
    }
    const Image au = apply_a(u);
    const Image r = au - b_ + kt_p;
    const double quad = 0.5 * r.dot(solve(r, 1.0 / tau_));
    const double r_err = 64.0 * kEps * (au.norm() + b_.norm() + kt_p.norm());
    const double r_norm = r.norm();
    const double gap = std::max(0.0, quad) + tau_ * r_err * r_norm + 0.5 * tau_ * r_err * r_err +
                       tv_gap + 64.0 * kEps * scale;
    return std::sqrt(2.0 * tau_ * gap);
  }

  double objective(const Image& u) const {
    return v_.value(u) + (u - x_).squaredNorm() / (2.0 * tau_);
  }

 private:
  const DeconvolutionPotential& v_;
  const Image& x_;
  double tau_;
  std::size_t side_;
  double prec_;
  double beta_;
  Image b_;
};

}  // namespace

Point image_gradient(const Image& u, std::size_t side) {
  const std::size_t n = side;
  const auto np = static_cast<Eigen::Index>(n * n);
  Point out(2 * np);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = i * n + j;
      out[static_cast<Eigen::Index>(k)] = j + 1 < n ? u[k + 1] - u[k] : 0.0;
      out[np + static_cast<Eigen::Index>(k)] = i + 1 < n ? u[k + n] - u[k] : 0.0;
    }
  }
  return out;
}

Image image_gradient_adjoint(const Point& p, std::size_t side) {
  const std::size_t n = side;
  const auto np = static_cast<Eigen::Index>(n * n);
  Image out = Image::Zero(np);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = i * n + j;
      const double px = p[static_cast<Eigen::Index>(k)];
      const double py = p[np + static_cast<Eigen::Index>(k)];
      if (j + 1 < n) {
        out[k] -= px;
        out[k + 1] += px;
      }
      if (i + 1 < n) {
        out[k] -= py;
        out[k + n] += py;
      }
    }
  }
  return out;
}

ProxResult prox_tv_pdhg(const ProxRequest& req, const DeconvolutionPotential& v,
                        const PdhgOptions& opts) {
  validate_request(req, v.dim());
  if (!(opts.initial_step > 0.0) || !(opts.adapt_alpha >= 0.0) || !(opts.balance > 1.0) ||
      opts.check_every == 0) {
    throw std::invalid_argument("pdhg: invalid step-size options");
  }
  const std::size_t side = v.side();
  const std::size_t pixels = v.dim();
  const TvProxProblem prob(req, v);

  Image u = req.x;
  Point p = Point::Zero(static_cast<Eigen::Index>(2 * pixels));
  if (req.dual_initial && static_cast<std::size_t>(req.dual_initial->size()) == 2 * pixels &&
      req.dual_initial->allFinite()) {
    p = *req.dual_initial;
    project_dual(p, pixels, v.beta());
  }
  Point kt_p = image_gradient_adjoint(p, side);

  double step_p = opts.initial_step;  // primal
  double step_d = opts.initial_step;  // dual
  double alpha = opts.adapt_alpha;

  Image best = u;
  double best_bound = std::numeric_limits<double>::infinity();
  auto check = [&]() {
    const double bu = prob.certified_distance(u, p, kt_p);
    if (bu < best_bound) {
      best_bound = bu;
      best = u;
    }
    Image from_dual = prob.primal_from_dual(kt_p);
    const double bd = prob.certified_distance(from_dual, p, kt_p);
    if (bd < best_bound) {
      best_bound = bd;
      best = std::move(from_dual);
    }
  };

  check();
  std::size_t iters = 0;
  while (best_bound > req.delta && iters < req.max_iterations) {
    const Image rhs = prob.b() + (u - step_p * kt_p) / step_p;
    Image u_next = prob.solve(rhs, 1.0 / req.tau + 1.0 / step_p);
    const Image u_bar = 2.0 * u_next - u;
    Point p_next = p + step_d * image_gradient(u_bar, side);
    project_dual(p_next, pixels, v.beta());
    const Point kt_p_next = image_gradient_adjoint(p_next, side);

    const double primal_res = ((u - u_next) / step_p - (kt_p - kt_p_next)).norm();
    const double dual_res = ((p - p_next) / step_d - image_gradient(u - u_next, side)).norm();
    if (primal_res > opts.balance * dual_res) {
      step_p *= 1.0 + alpha;
      step_d /= 1.0 + alpha;
      alpha *= opts.adapt_eta;
    } else if (dual_res > opts.balance * primal_res) {
      step_p /= 1.0 + alpha;
      step_d *= 1.0 + alpha;
      alpha *= opts.adapt_eta;
    }

    u = std::move(u_next);
    p = std::move(p_next);
    kt_p = kt_p_next;
    ++iters;
    if (iters % opts.check_every == 0 || iters == req.max_iterations) check();
  }

  ProxResult out;
  out.iterations = iters;
  out.dual = p;
  const double fx = v.value(req.x);
  double f_best = best.allFinite() ? prob.objective(best) : std::numeric_limits<double>::infinity();
  if (!(f_best <= fx)) {
    // Never return a point worse than the start.
    best = req.x;
    best_bound = prob.certified_distance(best, p, kt_p);
    f_best = fx;
  }
  out.point = std::move(best);
  out.error_bound = best_bound;
  out.objective = f_best;
  out.converged = best_bound <= req.delta;
  return out;
}

}  // namespace ipla
