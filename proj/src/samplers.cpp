#include "ipla/samplers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace ipla {

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SamplerKind parse_sampler(const std::string& name) {
  if (name == "ipla") return SamplerKind::ipla;
  if (name == "ula") return SamplerKind::ula;
  if (name == "tula") return SamplerKind::tula;
  if (name == "mh") return SamplerKind::mh;
  throw std::invalid_argument("unknown sampler '" + name + "' (expected ipla, ula, tula or mh)");
}

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::ipla: return "ipla";
    case SamplerKind::ula: return "ula";
    case SamplerKind::tula: return "tula";
    case SamplerKind::mh: return "mh";
  }
  return "?";
}

Taming parse_taming(const std::string& name) {
  if (name == "tau") return Taming::tau;
  if (name == "plain") return Taming::plain;
  throw std::invalid_argument("unknown taming '" + name + "' (expected tau or plain)");
}

std::string to_string(Taming taming) { return taming == Taming::tau ? "tau" : "plain"; }

bool is_diverged_point(const Point& x) {
  if (!x.allFinite()) return true;
  const double n = x.norm();
  return !std::isfinite(n) || n > kDivergenceNorm;
}

ChainState make_state(Point x0, std::uint64_t seed) {
  require_finite(x0, "initial state");
  ChainState s;
  s.x = std::move(x0);
  s.rng = RandomStream(seed);
  return s;
}

double ipla_delta(const IplaSettings& s) {
  if (s.delta) return *s.delta;
  return s.kappa * std::pow(s.tau, 1.0 + s.alpha);
}

namespace {

// Adds sqrt(2 tau) Z to x, drawing one normal per coordinate.
void add_noise(ChainState& s, double tau) {
  Point z(s.x.size());
  s.rng.fill_normal(z);
  if (s.noise) s.x += std::sqrt(2.0 * tau) * z;
}

void mark_if_diverged(ChainState& s) {
  if (is_diverged_point(s.x)) s.diverged_at = s.step;
}

}  // namespace

StepInfo ipla_step(ChainState& s, const ProxSolver& prox, const IplaSettings& settings) {
  StepInfo info;
  if (s.diverged_at) return info;
  ProxRequest req;
  req.x = s.x;
  req.tau = settings.tau;
  req.delta = ipla_delta(settings);
  req.max_iterations = settings.prox_max_iterations;
  if (settings.warm_start) {
    req.initial = s.last_prox;
    req.dual_initial = s.last_dual;
  }
  ProxResult res = prox.solve(req);
  info.prox_iterations = res.iterations;
  info.prox_error = res.error_bound;
  info.prox_failed = !res.converged;
  if (settings.warm_start) {
    s.last_prox = res.point;
    if (res.dual.size() > 0) s.last_dual = std::move(res.dual);
  }
  s.x = std::move(res.point);
  ++s.step;
  add_noise(s, settings.tau);
  if (info.prox_failed && !settings.tolerate_prox_failures) {
    s.diverged_at = s.step;
    return info;
  }
  mark_if_diverged(s);
  return info;
}

void ula_step(ChainState& s, const Potential& v, double tau) {
  if (s.diverged_at) return;
  s.x -= tau * v.gradient(s.x);
  ++s.step;
  add_noise(s, tau);
  mark_if_diverged(s);
}

void tula_step(ChainState& s, const Potential& v, double tau, Taming taming) {
  if (s.diverged_at) return;
  const Point g = v.gradient(s.x);
  const double scale = taming == Taming::tau ? tau : 1.0;
  s.x -= tau * g / (1.0 + scale * g.norm());
  ++s.step;
  add_noise(s, tau);
  mark_if_diverged(s);
}

void mh_step(ChainState& s, const Potential& v, double proposal_std) {
  if (s.diverged_at) return;
  Point z(s.x.size());
  s.rng.fill_normal(z);
  const double u = s.rng.uniform();
  ++s.step;
  if (!s.mh_value) s.mh_value = v.value(s.x);
  if (!s.noise || proposal_std == 0.0) return;
  Point y = s.x + proposal_std * z;
  if (is_diverged_point(y)) return;
  const double vy = v.value(y);
  const double log_ratio = *s.mh_value - vy;
  if (log_ratio >= 0.0 || u < std::exp(log_ratio)) {
    s.x = std::move(y);
    s.mh_value = vy;
    ++s.accepted;
  }
}

void validate_chain_config(const ChainConfig& c, std::size_t dim) {
  require_dim(c.x0, dim, "initial state");
  require_finite(c.x0, "initial state");
  if (!(c.ipla.tau > 0.0) || !std::isfinite(c.ipla.tau)) throw std::invalid_argument("tau must be positive");
  if (c.sampler == SamplerKind::ipla) {
    if (!(c.ipla.kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
    if (!(c.ipla.alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (c.ipla.delta && !(*c.ipla.delta > 0.0)) throw std::invalid_argument("delta must be positive");
  }
  if (c.burn_in > c.n_steps) throw std::invalid_argument("burn_in exceeds n_steps");
  if (c.thinning == 0) throw std::invalid_argument("thinning must be positive");
  if (c.trajectory_every == 0) throw std::invalid_argument("trajectory_every must be positive");
  if (!(c.proposal_std >= 0.0)) throw std::invalid_argument("proposal_std must be >= 0");
  for (double m : c.moment_orders) {
    if (!(m > 0.0)) throw std::invalid_argument("moment orders must be positive");
  }
}

ChainTrace run_chain(const Potential& v, const ProxSolver* prox, const ChainConfig& cfg,
                     const StepObserver& observer) {
  validate_chain_config(cfg, v.dim());
  if (cfg.sampler == SamplerKind::ipla && prox == nullptr) {
    throw std::invalid_argument("ipla needs a prox solver");
  }
  const double tau = cfg.ipla.tau;
  const double lambda = v.profile().lambda_v;
  if (cfg.sampler != SamplerKind::mh && lambda > 0.0 && tau >= 1.0 / lambda) {
    std::cerr << "warning: tau = " << tau << " is not below 1/lambda_v = " << 1.0 / lambda << "\n";
  }
  const double proposal_std =
      cfg.proposal_std > 0.0 ? cfg.proposal_std : 0.5 / std::sqrt(static_cast<double>(v.dim()));

  ChainTrace trace;
  trace.moment_orders = cfg.moment_orders;
  trace.moment_sums.resize(cfg.moment_orders.size());
  ChainState s = make_state(cfg.x0, cfg.seed);

  auto record = [&](std::size_t prox_iters) {
    if (!cfg.record_trajectory) return;
    if (s.step > 1000 && s.step % cfg.trajectory_every != 0 && !s.diverged_at) return;
    trace.trajectory.push_back({s.step, s.x[0], s.x.squaredNorm(), prox_iters, s.diverged_at.has_value()});
  };
  record(0);

  for (std::size_t k = 0; k < cfg.n_steps; ++k) {
    StepInfo info;
    switch (cfg.sampler) {
      case SamplerKind::ipla: info = ipla_step(s, *prox, cfg.ipla); break;
      case SamplerKind::ula: ula_step(s, v, tau); break;
      case SamplerKind::tula: tula_step(s, v, tau, cfg.taming); break;
      case SamplerKind::mh: mh_step(s, v, proposal_std); break;
    }
    trace.prox_iterations += info.prox_iterations;
    if (info.prox_failed) ++trace.prox_failures;
    if (s.diverged_at) {
      trace.diverged_at = s.diverged_at;
      record(info.prox_iterations);
      if (observer) observer(s, info);
      break;
    }
    if (s.step > cfg.burn_in) {
      ++trace.count;
      const double nsq = s.x.squaredNorm();
      for (std::size_t j = 0; j < cfg.moment_orders.size(); ++j) {
        trace.moment_sums[j].add(std::pow(nsq, 0.5 * cfg.moment_orders[j]));
      }
      if (cfg.keep_samples && (s.step - cfg.burn_in - 1) % cfg.thinning == 0) trace.samples.push_back(s.x);
    }
    record(info.prox_iterations);
    if (observer) observer(s, info);
  }
  trace.steps = s.step;
  trace.accepted = s.accepted;
  trace.final_state = s.x;
  return trace;
}

std::vector<ChainTrace> run_replicas(const Potential& v, const ProxSolver* prox,
                                     const ChainConfig& cfg, std::size_t replicas,
                                     std::uint64_t base_seed, std::size_t workers) {
  if (replicas == 0) throw std::invalid_argument("replicas must be at least 1");
  validate_chain_config(cfg, v.dim());
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, replicas);

  std::vector<ChainTrace> out(replicas);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&]() {
    for (std::size_t r = next++; r < replicas; r = next++) {
      try {
        ChainConfig c = cfg;
        c.seed = mix_seed(base_seed, r);
        c.record_trajectory = cfg.record_trajectory && r == 0;
        out[r] = run_chain(v, prox, c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace ipla
