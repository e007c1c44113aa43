#pragma once

#include <optional>

namespace ipla {

/// Moments nu(|.|), nu(|.|^q_V), nu(|.|^(q_V - 1)) of a reference law nu.
struct NuMoments {
  double m1 = 0.0;
  double mq = 0.0;
  double mq_minus_1 = 0.0;
};

struct TheoryInputs {
  double d = 1.0;
  double q_v = 1.0;
  double lambda_v = 1.0;
  double r_v = 0.0;
  double c_v = 1.0;
  double l_q = 1.0;
  double kappa = 1.0;
  double alpha = 1.0;
  double tau = 0.1;
  // Initial law is the point mass at a point of this norm, so
  // E|X_0|^k = x0_norm^k.
  double x0_norm = 0.0;
  double w2_init = 1.0;  // W_2^2(initial law, target) or an upper bound
  std::optional<double> c_mu;  // C(mu*) supplied directly
  std::optional<NuMoments> nu;  // otherwise C(mu*) is bounded from these
};

void validate_theory_inputs(const TheoryInputs& in);

/// kappa * tau^(1 + alpha).
double theory_delta(const TheoryInputs& in);

/// Gaussian moment constant: E|Z|^m <= C~_m tau^(m/2) d^(m/2) for Z ~ N(0, 2 tau I).
double noise_moment_constant(double m);

/// Taylor-remainder constant c(m) = m^2 2^m used in the moment bounds.
double taylor_constant(double m);

/// Moment-bound constant C_m with sup_k E|X_k|^m <= C_m min{1, lambda_V^-m} d^(m/2).
double moment_constant(const TheoryInputs& in, double m);

struct KTau {
  double value = 0.0;
  double linear_constant = 0.0;  // C_q with K(tau) <= C_q tau d^((q+1)/2) for tau <= 1
  double linear_bound = 0.0;     // C_q tau d^((q+1)/2)
};

KTau k_tau(const TheoryInputs& in);

/// C(nu) for the declared nu-moments at the inputs' tau.
double c_nu(const TheoryInputs& in, const NuMoments& nu);

/// C(mu*): the override if given, else c_nu(in, *in.nu).
double c_mu_star(const TheoryInputs& in);

struct Budget {
  double tau = 0.0;
  double n = 0.0;  // iteration count, an integer stored as double
};

/// Largest tau in (0, 1] with tau^alpha * 3 C(mu*) kappa <= eps and
/// K(tau) <= eps / 3; n = ceil(3 W / (2 eps tau)).
Budget kl_budget(const TheoryInputs& in, double eps);

/// Requires r_v = 0 and lambda_v > 0. Largest tau < min(1, 1/lambda) with
/// tau^(2 alpha) <= lambda^2 eps / (96 kappa^2 log^2(6W/eps)) and
/// K(tau) <= lambda eps / 12; n = ceil(2 log(6W/eps) / (tau lambda)).
Budget w2_budget(const TheoryInputs& in, double eps);

/// Right-hand side of the W2 error bound after k steps.
double w2_bias_bound(const TheoryInputs& in, double k);

}  // namespace ipla
