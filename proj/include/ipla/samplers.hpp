#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ipla/potentials.hpp"
#include "ipla/prox.hpp"
#include "ipla/rng.hpp"
#include "ipla/summation.hpp"

namespace ipla {

enum class SamplerKind { ipla, ula, tula, mh };
enum class Taming { tau, plain };

SamplerKind parse_sampler(const std::string& name);
std::string to_string(SamplerKind kind);
Taming parse_taming(const std::string& name);
std::string to_string(Taming taming);

/// States with a non-finite coordinate or norm above this are diverged.
inline constexpr double kDivergenceNorm = 1e154;
bool is_diverged_point(const Point& x);

struct ChainState {
  Point x;
  std::size_t step = 0;
  RandomStream rng;
  std::optional<std::size_t> diverged_at;
  // Warm-start data carried between prox calls when enabled.
  std::optional<Point> last_prox;
  std::optional<Point> last_dual;
  // Cached V(x) for Metropolis-Hastings.
  std::optional<double> mh_value;
  std::size_t accepted = 0;
  // Test hook: when false the Gaussian increments are still drawn (so the
  // stream advances identically) but multiplied by zero.
  bool noise = true;
};

ChainState make_state(Point x0, std::uint64_t seed);

struct IplaSettings {
  double tau = 0.1;
  double kappa = 1.0;
  double alpha = 1.0;
  std::optional<double> delta;  // absolute override of kappa * tau^(1+alpha)
  std::size_t prox_max_iterations = 10000;
  bool warm_start = false;
  // When false a prox failure marks the chain diverged; when true the step
  // proceeds with the solver's best point and the failure is only counted.
  bool tolerate_prox_failures = false;
};

double ipla_delta(const IplaSettings& s);

struct StepInfo {
  std::size_t prox_iterations = 0;
  bool prox_failed = false;
  double prox_error = 0.0;
};

/// One step of each kernel. Diverged states are left untouched and consume
/// no random numbers. Each live step draws exactly dim normals, plus one
/// uniform for Metropolis-Hastings.
StepInfo ipla_step(ChainState& s, const ProxSolver& prox, const IplaSettings& settings);
void ula_step(ChainState& s, const Potential& v, double tau);
void tula_step(ChainState& s, const Potential& v, double tau, Taming taming = Taming::tau);
void mh_step(ChainState& s, const Potential& v, double proposal_std);

struct ChainConfig {
  SamplerKind sampler = SamplerKind::ipla;
  IplaSettings ipla;  // tau is shared by ula/tula
  Taming taming = Taming::tau;
  double proposal_std = 0.0;  // 0 selects 0.5 / sqrt(dim)
  std::size_t n_steps = 1000;
  std::size_t burn_in = 0;
  std::size_t thinning = 1;
  bool keep_samples = false;
  bool record_trajectory = true;
  std::size_t trajectory_every = 100;  // all of the first 1000 steps, then every k-th
  std::vector<double> moment_orders{2.0, 4.0, 6.0};
  std::uint64_t seed = 0;
  Point x0;
};

void validate_chain_config(const ChainConfig& c, std::size_t dim);

struct TrajectoryRow {
  std::size_t step = 0;
  double x1 = 0.0;
  double norm_sq = 0.0;
  std::size_t prox_iters = 0;
  bool diverged = false;
};

struct ChainTrace {
  std::vector<Point> samples;  // post burn-in, every thinning-th state
  std::vector<TrajectoryRow> trajectory;
  std::vector<double> moment_orders;
  std::vector<CompensatedSum> moment_sums;  // sum of |X_k|^m over post burn-in steps
  std::size_t count = 0;
  std::size_t prox_iterations = 0;
  std::size_t prox_failures = 0;
  std::size_t steps = 0;
  std::size_t accepted = 0;
  std::optional<std::size_t> diverged_at;
  Point final_state;
};

using StepObserver = std::function<void(const ChainState&, const StepInfo&)>;

/// Runs one chain. `prox` is required for IPLA only; ULA/TULA need a
/// gradient and MH only values.
ChainTrace run_chain(const Potential& v, const ProxSolver* prox, const ChainConfig& cfg,
                     const StepObserver& observer = {});

/// Runs independent replicas (replica r seeded with mix_seed(base_seed, r))
/// on up to `workers` threads. Results are indexed by replica and do not
/// depend on the worker count. Only replica 0 records a trajectory.
std::vector<ChainTrace> run_replicas(const Potential& v, const ProxSolver* prox,
                                     const ChainConfig& cfg, std::size_t replicas,
                                     std::uint64_t base_seed, std::size_t workers = 0);

}  // namespace ipla
