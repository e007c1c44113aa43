#include "ipla/theory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace ipla {

namespace {

TheoryInputs with_tau(TheoryInputs in, double tau) {
  in.tau = tau;
  return in;
}

// Largest t in (0, hi] with ok(t), assuming ok is monotone (true below a
// threshold). Halves down from hi, then bisects geometrically.
double largest_feasible(double hi, const std::function<bool(double)>& ok, const char* what) {
  if (ok(hi)) return hi;
  double good = hi;
  bool found = false;
  for (int i = 0; i < 2000 && good > 0.0; ++i) {
    good *= 0.5;
    if (good > 0.0 && ok(good)) {
      found = true;
      break;
    }
  }
  if (!found) throw std::domain_error(std::string(what) + ": no admissible step size in (0, 1]");
  double bad = std::min(hi, 2.0 * good);
  for (int i = 0; i < 200 && bad / good - 1.0 > 1e-13; ++i) {
    const double mid = std::sqrt(good * bad);
    if (ok(mid)) good = mid; else bad = mid;
  }
  return good;
}

}  // namespace

void validate_theory_inputs(const TheoryInputs& in) {
  if (!(in.d >= 1.0)) throw std::invalid_argument("theory: d must be >= 1");
  if (!(in.q_v >= 1.0)) throw std::invalid_argument("theory: q_v must be >= 1");
  if (!(in.lambda_v >= 0.0)) throw std::invalid_argument("theory: lambda_v must be >= 0");
  if (!(in.r_v >= 0.0)) throw std::invalid_argument("theory: r_v must be >= 0");
  if (!(in.c_v > 0.0)) throw std::invalid_argument("theory: c_v must be > 0");
  if (!(in.l_q > 0.0)) throw std::invalid_argument("theory: l_q must be > 0");
  if (!(in.kappa > 0.0)) throw std::invalid_argument("theory: kappa must be > 0");
  if (!(in.alpha >= 0.0)) throw std::invalid_argument("theory: alpha must be >= 0");
  if (!(in.tau > 0.0)) throw std::invalid_argument("theory: tau must be > 0");
  if (!(in.x0_norm >= 0.0)) throw std::invalid_argument("theory: x0_norm must be >= 0");
  if (!(in.w2_init >= 0.0)) throw std::invalid_argument("theory: w2_init must be >= 0");
}

double theory_delta(const TheoryInputs& in) { return in.kappa * std::pow(in.tau, 1.0 + in.alpha); }

double noise_moment_constant(double m) {
  if (m >= 2.0) {
    return std::pow(4.0, m / 2.0) * boost::math::tgamma((1.0 + m) / 2.0) / boost::math::tgamma(0.5);
  }
  return std::pow(2.0, m / 2.0);
}

double taylor_constant(double m) { return m * m * std::pow(2.0, m); }

double moment_constant(const TheoryInputs& in, double m) {
  validate_theory_inputs(in);
  if (!(m >= 0.0)) throw std::invalid_argument("moment_constant: m must be >= 0");
  const double d = in.d, kap = in.kappa, lam = in.lambda_v, r = in.r_v;
  const double delta = theory_delta(in);
  if (m <= 2.0) {
    const double inner = 36.0 * kap * kap / d + lam * lam / d * in.x0_norm * in.x0_norm +
                         (16.0 * kap * delta + 4.0 * r * r * lam + 4.0 * delta * r * lam + 8.0 * d) / d * lam;
    return std::pow(inner, m / 2.0);
  }
  if (lam == 0.0) throw std::domain_error("moment_constant: lambda_v = 0 is not allowed for m > 2");
  const double f = std::floor(m);
  const double a = m - f;
  const double c = taylor_constant(m);
  const double a0 = std::pow(in.x0_norm, m);
  const double f1 = std::floor(m - 1.0);
  const double f2 = std::floor(m - 2.0);
  const double dpow = std::pow(d, -f / 2.0);
  const double noise_term = 2.0 * kap * delta + 4.0 * d;
  const double bracket =
      std::pow(2.0, f) * std::pow(c, f) * std::pow(kap, f) * dpow +
      f1 * 2.0 * c * noise_term / d +
      dpow * std::pow(lam, f) * (a0 + std::pow(r, f)) +
      c * dpow * std::pow(lam, f1) *
          (std::pow(r, f1) + 2.0 * noise_term * std::pow(r, f2) / lam + std::pow(2.0, f) * kap * std::pow(delta, f1)) +
      c * std::pow(2.0, f) * noise_moment_constant(m) * std::pow(lam, f / 2.0);
  return moment_constant(in, a) * bracket;
}

KTau k_tau(const TheoryInputs& in) {
  validate_theory_inputs(in);
  const double q = in.q_v, d = in.d, lam = in.lambda_v;
  if (lam == 0.0 && q > 1.0) throw std::domain_error("k_tau: lambda_v = 0 requires q_v = 1");
  const double lam_pow = q > 1.0 ? std::pow(lam, -(q - 1.0) / 2.0) : 1.0;
  const double lead = std::pow(2.0, 4.0 * q - 3.0) * in.l_q;
  KTau out;
  out.value = lead * ((1.0 + moment_constant(in, q - 1.0) * std::pow(d, (q - 1.0) / 2.0) * lam_pow) * 2.0 * d * in.tau +
                      moment_constant(in, q + 1.0) * std::pow(d, (q + 1.0) / 2.0) * std::pow(in.tau, (q + 1.0) / 2.0));
  // Every C_m is non-decreasing in tau (through delta), so tau = 1 bounds
  // them on (0, 1]; d <= d^((q+1)/2) and tau^((q+1)/2) <= tau finish it.
  const TheoryInputs one = with_tau(in, 1.0);
  out.linear_constant = lead * (2.0 * (1.0 + moment_constant(one, q - 1.0) * lam_pow) + moment_constant(one, q + 1.0));
  out.linear_bound = out.linear_constant * in.tau * std::pow(d, (q + 1.0) / 2.0);
  return out;
}

double c_nu(const TheoryInputs& in, const NuMoments& nu) {
  validate_theory_inputs(in);
  const double delta = theory_delta(in);
  const double lam_factor = in.lambda_v > 0.0 ? std::min(1.0, 1.0 / in.lambda_v) : 1.0;
  return in.c_v * (nu.m1 + nu.mq * delta + delta * nu.mq_minus_1 + std::pow(delta, in.q_v)) * in.tau +
         2.0 * (nu.m1 + moment_constant(in, 1.0) * lam_factor * std::sqrt(in.d) + delta);
}

double c_mu_star(const TheoryInputs& in) {
  if (in.c_mu) return *in.c_mu;
  if (in.nu) return c_nu(in, *in.nu);
  throw std::invalid_argument("C(mu*) needs either c_mu or the nu moments of the target");
}

Budget kl_budget(const TheoryInputs& in, double eps) {
  validate_theory_inputs(in);
  if (!(eps > 0.0)) throw std::invalid_argument("kl_budget: eps must be > 0");
  c_mu_star(in);  // fail early when C(mu*) is unavailable
  auto ok = [&](double t) {
    const TheoryInputs at = with_tau(in, t);
    return std::pow(t, in.alpha) * 3.0 * c_mu_star(at) * in.kappa <= eps && k_tau(at).value <= eps / 3.0;
  };
  Budget b;
  b.tau = largest_feasible(1.0, ok, "kl_budget");
  b.n = std::ceil(3.0 * in.w2_init / (2.0 * eps * b.tau));
  return b;
}

Budget w2_budget(const TheoryInputs& in, double eps) {
  validate_theory_inputs(in);
  if (!(eps > 0.0)) throw std::invalid_argument("w2_budget: eps must be > 0");
  if (in.r_v != 0.0) {
    throw std::domain_error("w2_budget: the W2 bound needs strong convexity everywhere (r_v = 0)");
  }
  if (!(in.lambda_v > 0.0)) throw std::domain_error("w2_budget: lambda_v must be > 0");
  const double lam = in.lambda_v;
  const double log_term = std::log(6.0 * in.w2_init / eps);
  const double hi = std::min(1.0, std::nextafter(1.0 / lam, 0.0));
  auto ok = [&](double t) {
    if (log_term > 0.0 &&
        std::pow(t, 2.0 * in.alpha) > lam * lam * eps / (96.0 * in.kappa * in.kappa * log_term * log_term)) {
      return false;
    }
    return k_tau(with_tau(in, t)).value <= lam * eps / 12.0;
  };
  Budget b;
  b.tau = largest_feasible(hi, ok, "w2_budget");
  b.n = std::max(0.0, std::ceil(2.0 * log_term / (b.tau * lam)));
  return b;
}

double w2_bias_bound(const TheoryInputs& in, double k) {
  validate_theory_inputs(in);
  if (in.r_v != 0.0) {
    throw std::domain_error("w2_bias_bound: the W2 bound needs strong convexity everywhere (r_v = 0)");
  }
  const double lam = in.lambda_v;
  if (!(lam > 0.0)) throw std::domain_error("w2_bias_bound: lambda_v must be > 0");
  if (!(in.tau < 1.0 / lam)) throw std::domain_error("w2_bias_bound: needs tau < 1/lambda_v");
  if (!(k >= 0.0)) throw std::invalid_argument("w2_bias_bound: k must be >= 0");
  const double first = 2.0 * std::pow(1.0 - in.tau * lam / 2.0, k) * in.w2_init;
  const double second = 4.0 / lam * k_tau(in).value;
  double third = 0.0;
  if (k > 1.0) {
    const double ratio = -std::expm1(-lam * in.tau * (k - 1.0)) / -std::expm1(-lam * in.tau);
    third = 2.0 * in.kappa * in.kappa * std::pow(in.tau, 2.0 + 2.0 * in.alpha) * ratio * ratio;
  }
  return first + second + third;
}

}  // namespace ipla
