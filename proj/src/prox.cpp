#include "ipla/prox.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace ipla {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kInf = std::numeric_limits<double>::infinity();

class ProxObjective {
 public:
  ProxObjective(const Potential& v, const Point& x, double tau) : v_(v), x_(x), tau_(tau) {}

  double value(const Point& y) const {
    if (!y.allFinite()) return kInf;
    const double val = v_.value(y) + (y - x_).squaredNorm() / (2.0 * tau_);
    return std::isfinite(val) ? val : kInf;
  }

  Point gradient(const Point& y, const Point& grad_v) const { return grad_v + (y - x_) / tau_; }

  // Distance to the prox point certified by strong convexity of the
  // objective, with a slack for the rounding in forming the gradient.
  double certified_distance(const Point& y, const Point& grad_v, double modulus) const {
    const double g = gradient(y, grad_v).norm();
    const double slack = 16.0 * kEps * (grad_v.norm() + (y.norm() + x_.norm()) / tau_);
    double bound = (g + slack) / modulus;
    const auto& prof = v_.profile();
    if (prof.hessian_floor >= 0.0 && prof.minimizer && y == x_) {
      // For convex V the prox point is no farther from x than the minimizer.
      bound = std::min(bound, (x_ - *prof.minimizer).norm());
    }
    return bound;
  }

 private:
  const Potential& v_;
  const Point& x_;
  double tau_;
};

double strong_convexity_modulus(const Potential& v, double tau) {
  const double mu = 1.0 / tau + std::min(0.0, v.profile().hessian_floor);
  if (!(mu > 0.0)) {
    throw std::invalid_argument(v.name() +
                                ": prox objective is not strongly convex at this tau (tau too large)");
  }
  return mu;
}

// Starting point: x itself, or the caller's guess when it is strictly better.
Point starting_point(const ProxRequest& req, const ProxObjective& obj, std::size_t dim) {
  if (req.initial && static_cast<std::size_t>(req.initial->size()) == dim) {
    if (obj.value(*req.initial) < obj.value(req.x)) return *req.initial;
  }
  return req.x;
}

// Sufficient-decrease test that stays usable once the predicted decrease is
// below the rounding level of the objective: there a step is accepted only
// when it shrinks the gradient.
bool accept_step(double ft, double fy, double predicted, const ProxObjective& obj, const Potential& v,
                 const Point& trial, double gnorm) {
  const double noise = 8.0 * kEps * std::abs(fy);
  if (predicted > noise) return ft <= fy - predicted;
  if (!std::isfinite(ft) || ft > fy + noise) return false;
  return obj.gradient(trial, v.gradient(trial)).norm() < gnorm;
}

ProxResult finish(Point y, double bound, std::size_t iters, double objective, double delta) {
  ProxResult out;
  out.point = std::move(y);
  out.error_bound = bound;
  out.iterations = iters;
  out.objective = objective;
  out.converged = bound <= delta;
  return out;
}

}  // namespace

void validate_request(const ProxRequest& req, std::size_t dim) {
  require_dim(req.x, dim, "prox request");
  require_finite(req.x, "prox request");
  if (!(req.tau > 0.0) || !std::isfinite(req.tau)) throw std::invalid_argument("prox: tau must be positive");
  if (!(req.delta > 0.0)) throw std::invalid_argument("prox: delta must be positive");
  if (req.max_iterations == 0) throw std::invalid_argument("prox: max_iterations must be positive");
}

ProxResult prox_exact_gaussian(const ProxRequest& req) {
  validate_request(req, static_cast<std::size_t>(req.x.size()));
  Point y = req.x / (1.0 + req.tau);
  const double obj = 0.5 * y.squaredNorm() + (y - req.x).squaredNorm() / (2.0 * req.tau);
  const double rounding = kEps * y.norm();
  return finish(std::move(y), rounding, 0, obj, req.delta);
}

double cubic_prox_root(double x, double tau) {
  if (x == 0.0) return 0.0;
  const double s = x > 0.0 ? 1.0 : -1.0;
  const double a = std::abs(x);
  // Work with a > 0; f(y) = tau y^3 + y - a is increasing and convex on [0, a],
  // so Newton from an upper bound decreases monotonically onto the root.
  double lo = 0.0, hi = std::min(a, std::cbrt(a / tau));
  double y = hi;
  for (int it = 0; it < 200; ++it) {
    const double f = tau * y * y * y + y - a;
    if (f == 0.0) break;
    if (f > 0.0) hi = y; else lo = y;
    double next = y - f / (3.0 * tau * y * y + 1.0);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - y) <= kEps * y || hi - lo <= kEps * hi) {
      y = next;
      break;
    }
    y = next;
  }
  return s * y;
}

ProxResult prox_exact_quartic(const ProxRequest& req) {
  validate_request(req, static_cast<std::size_t>(req.x.size()));
  const Eigen::Index n = req.x.size();
  Point y(n);
  double err_sq = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = cubic_prox_root(req.x[i], req.tau);
    const double e = std::max(1e-14, 4.0 * kEps * std::abs(y[i]));
    err_sq += e * e;
  }
  const double obj = 0.25 * y.array().square().square().sum() +
                     (y - req.x).squaredNorm() / (2.0 * req.tau);
  return finish(std::move(y), std::sqrt(err_sq), 0, obj, req.delta);
}

ProxResult prox_gd(const ProxRequest& req, const Potential& v) {
  validate_request(req, v.dim());
  const double mu = strong_convexity_modulus(v, req.tau);
  const ProxObjective obj(v, req.x, req.tau);

  Point y = starting_point(req, obj, v.dim());
  double fy = obj.value(y);
  Point gv = v.gradient(y);
  double t = req.tau;
  std::size_t iters = 0;
  double bound = obj.certified_distance(y, gv, mu);
  while (bound > req.delta && iters < req.max_iterations) {
    const Point g = obj.gradient(y, gv);
    const double gg = g.squaredNorm();
    Point trial;
    double ft = kInf;
    bool accepted = false;
    while (t > 1e-300) {
      trial = y - t * g;
      ft = obj.value(trial);
      if (accept_step(ft, fy, 0.5 * t * gg, obj, v, trial, std::sqrt(gg))) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // rounding floor reached
    y = std::move(trial);
    fy = ft;
    gv = v.gradient(y);
    ++iters;
    bound = obj.certified_distance(y, gv, mu);
    t = std::min(2.0 * t, req.tau);
  }
  return finish(std::move(y), bound, iters, fy, req.delta);
}

ProxResult prox_newton(const ProxRequest& req, const Potential& v) {
  validate_request(req, v.dim());
  const double mu = strong_convexity_modulus(v, req.tau);
  const ProxObjective obj(v, req.x, req.tau);
  const double inv_tau = 1.0 / req.tau;
  const std::size_t max_cg = 2 * v.dim() + 10;

  Point y = starting_point(req, obj, v.dim());
  double fy = obj.value(y);
  Point gv = v.gradient(y);
  std::size_t iters = 0;
  double bound = obj.certified_distance(y, gv, mu);
  while (bound > req.delta && iters < req.max_iterations) {
    const Point g = obj.gradient(y, gv);
    const double gnorm = g.norm();

    // CG on (Hess V(y) + I/tau) p = -g, truncated at relative tolerance.
    Point p = Point::Zero(g.size());
    Point r = -g;
    Point d = r;
    double rr = r.squaredNorm();
    const double tol = std::min(0.5, std::sqrt(gnorm)) * gnorm;
    for (std::size_t j = 0; j < max_cg; ++j) {
      const Point hd = v.hessian_vec(y, d) + inv_tau * d;
      const double curv = d.dot(hd);
      if (!(curv > 0.0)) {
        if (j == 0) p = -g;
        break;
      }
      const double a = rr / curv;
      p += a * d;
      r -= a * hd;
      const double rr_next = r.squaredNorm();
      if (std::sqrt(rr_next) <= tol) break;
      d = r + (rr_next / rr) * d;
      rr = rr_next;
    }
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      p = -g;
      slope = -g.squaredNorm();
    }

    double t = 1.0;
    bool accepted = false;
    Point trial;
    double ft = kInf;
    for (int ls = 0; ls < 60; ++ls) {
      trial = y + t * p;
      ft = obj.value(trial);
      if (accept_step(ft, fy, -1e-4 * t * slope, obj, v, trial, gnorm)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // Gradient step fallback.
      t = req.tau;
      while (t > 1e-300) {
        trial = y - t * g;
        ft = obj.value(trial);
        if (accept_step(ft, fy, 0.5 * t * g.squaredNorm(), obj, v, trial, gnorm)) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
    }
    if (!accepted) break;
    y = std::move(trial);
    fy = ft;
    gv = v.gradient(y);
    ++iters;
    bound = obj.certified_distance(y, gv, mu);
  }
  return finish(std::move(y), bound, iters, fy, req.delta);
}

namespace {

class BoundSolver final : public ProxSolver {
 public:
  using Fn = std::function<ProxResult(const ProxRequest&)>;
  BoundSolver(std::string name, std::shared_ptr<const Potential> v, Fn fn)
      : name_(std::move(name)), v_(std::move(v)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  ProxResult solve(const ProxRequest& req) const override { return fn_(req); }

 private:
  std::string name_;
  std::shared_ptr<const Potential> v_;  // keeps the potential alive for fn_
  Fn fn_;
};

}  // namespace

std::unique_ptr<ProxSolver> make_prox_solver(const std::string& kind,
                                             std::shared_ptr<const Potential> v,
                                             const PdhgOptions& pdhg) {
  if (!v) throw std::invalid_argument("prox solver: null potential");
  const Potential* raw = v.get();
  if (kind == "exact") {
    if (dynamic_cast<const GaussianPotential*>(raw)) {
      return std::make_unique<BoundSolver>(kind, v, [raw](const ProxRequest& r) {
        validate_request(r, raw->dim());
        return prox_exact_gaussian(r);
      });
    }
    if (dynamic_cast<const QuarticPotential*>(raw)) {
      return std::make_unique<BoundSolver>(kind, v, [raw](const ProxRequest& r) {
        validate_request(r, raw->dim());
        return prox_exact_quartic(r);
      });
    }
    throw std::invalid_argument("prox solver 'exact' is only available for the gaussian and quartic potentials");
  }
  if (kind == "gd" || kind == "newton") {
    if (!v->profile().smooth) {
      throw std::invalid_argument("prox solver '" + kind + "' needs a smooth potential; use pdhg");
    }
    if (kind == "gd") {
      return std::make_unique<BoundSolver>(kind, v,
                                           [raw](const ProxRequest& r) { return prox_gd(r, *raw); });
    }
    return std::make_unique<BoundSolver>(kind, v,
                                         [raw](const ProxRequest& r) { return prox_newton(r, *raw); });
  }
  if (kind == "pdhg") {
    const auto* deconv = dynamic_cast<const DeconvolutionPotential*>(raw);
    if (!deconv) throw std::invalid_argument("prox solver 'pdhg' needs the deconvolution potential");
    return std::make_unique<BoundSolver>(kind, v, [deconv, pdhg](const ProxRequest& r) {
      return prox_tv_pdhg(r, *deconv, pdhg);
    });
  }
  throw std::invalid_argument("unknown prox solver '" + kind + "' (expected exact, gd, newton or pdhg)");
}

}  // namespace ipla
