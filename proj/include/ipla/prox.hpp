#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "ipla/potentials.hpp"
#include "ipla/types.hpp"

namespace ipla {

/// argmin_y V(y) + |y - x|^2 / (2 tau), to be certified within `delta`.
struct ProxRequest {
  Point x;
  double tau = 1.0;
  double delta = 1e-8;
  std::size_t max_iterations = 10000;
  // Optional primal starting guess. The solver still never returns a point
  // whose objective exceeds V(x).
  std::optional<Point> initial;
  // Optional dual starting point for the primal-dual TV solver.
  std::optional<Point> dual_initial;
};

struct ProxResult {
  Point point;
  double error_bound = 0.0;  // certified |point - prox(x)|
  std::size_t iterations = 0;
  double objective = 0.0;    // V(point) + |point - x|^2 / (2 tau)
  bool converged = true;     // error_bound <= delta
  Point dual;                // final dual iterate (TV solver only)
};

void validate_request(const ProxRequest& req, std::size_t dim);

ProxResult prox_exact_gaussian(const ProxRequest& req);
ProxResult prox_exact_quartic(const ProxRequest& req);

/// Real root of tau*y^3 + y - x = 0 (safeguarded Newton).
double cubic_prox_root(double x, double tau);

/// Backtracking gradient descent on the prox objective.
ProxResult prox_gd(const ProxRequest& req, const Potential& v);

/// Inexact Newton with conjugate-gradient inner solves.
ProxResult prox_newton(const ProxRequest& req, const Potential& v);

struct PdhgOptions {
  double initial_step = 0.35355339059327373;  // 1/sqrt(8), with |grad|^2 <= 8
  double adapt_alpha = 0.5;                   // step ratio factor is (1 + alpha)
  double adapt_eta = 0.5;                     // alpha shrink per adjustment
  double balance = 10.0;                      // residual ratio that triggers adaptation
  std::size_t check_every = 10;
};

/// Primal-dual hybrid gradient with adaptive step balancing for
///   min_u |y - Hu|^2/(2 sigma^2) + beta TV(u) + |u - x|^2/(2 tau).
/// The error bound comes from the duality gap of this (1/tau)-strongly
/// convex problem: |u - u*| <= sqrt(2 tau gap).
ProxResult prox_tv_pdhg(const ProxRequest& req, const DeconvolutionPotential& v,
                        const PdhgOptions& opts = {});

/// Forward-difference image gradient with zero differences past the last
/// row/column, stored as [dx (n^2) ; dy (n^2)], and its adjoint.
Point image_gradient(const Image& u, std::size_t side);
Image image_gradient_adjoint(const Point& p, std::size_t side);

/// A configured solver bound to one potential.
class ProxSolver {
 public:
  virtual ~ProxSolver() = default;
  virtual std::string name() const = 0;
  virtual ProxResult solve(const ProxRequest& req) const = 0;
};

/// kind is one of exact, gd, newton, pdhg. `exact` requires a Gaussian or
/// quartic potential, `pdhg` the deconvolution potential.
std::unique_ptr<ProxSolver> make_prox_solver(const std::string& kind,
                                             std::shared_ptr<const Potential> v,
                                             const PdhgOptions& pdhg = {});

}  // namespace ipla
