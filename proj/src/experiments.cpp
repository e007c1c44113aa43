#include "ipla/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ipla/diagnostics.hpp"
#include "ipla/imaging.hpp"

namespace ipla {

namespace fs = std::filesystem;

std::string format_number(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::shared_ptr<const Potential> make_potential(const ExperimentConfig& cfg) {
  if (cfg.potential == "gaussian") return std::make_shared<GaussianPotential>(cfg.d);
  if (cfg.potential == "quartic") return std::make_shared<QuarticPotential>(cfg.d);
  if (cfg.potential == "ginzburg_landau") return std::make_shared<GinzburgLandauPotential>(cfg.gl);
  throw ConfigError("potential.name", "potential '" + cfg.potential +
                                          "' cannot be sampled here (expected gaussian, quartic or ginzburg_landau)");
}

Point initial_point(const ExperimentConfig& cfg, const Potential& v) {
  const auto n = static_cast<Eigen::Index>(v.dim());
  if (cfg.scenario == "minimizer") {
    return v.profile().minimizer ? *v.profile().minimizer : Point::Zero(n);
  }
  if (dynamic_cast<const GinzburgLandauPotential*>(&v)) {
    Point x = Point::Zero(n);
    x[0] = 100.0;
    return x;
  }
  return Point::Constant(n, 7.0);
}

namespace {

// Upper bound on E|Y|^s from the smallest even analytic moment of order >= s.
double moment_upper_bound(const std::string& potential, std::size_t d, double s) {
  if (s <= 0.0) return 1.0;
  const double even = 2.0 * std::ceil(s / 2.0);
  return std::pow(oracle_moment(potential, d, even), s / even);
}

PotentialProfile theory_profile(const ExperimentConfig& cfg) {
  if (cfg.theory_potential == "quartic") return QuarticPotential(1).profile();
  if (cfg.theory_potential == "gaussian") return GaussianPotential(1).profile();
  if (cfg.theory_potential == "ginzburg_landau") return GinzburgLandauPotential(cfg.gl).profile();
  if (cfg.theory_potential == "none") return {};
  throw ConfigError("theory.potential", "theory.potential must be quartic, gaussian, ginzburg_landau or none");
}

}  // namespace

TheoryInputs theory_inputs(const ExperimentConfig& cfg) {
  const PotentialProfile prof = theory_profile(cfg);
  const bool none = cfg.theory_potential == "none";
  auto pick = [&](const std::optional<double>& override, double fallback, const char* key) {
    if (override) return *override;
    if (none) throw ConfigError(key, std::string("theory.potential = none requires '") + key + "'");
    return fallback;
  };
  TheoryInputs in;
  in.d = static_cast<double>(cfg.d);
  in.q_v = pick(cfg.q_v, prof.q_v, "theory.q_v");
  in.lambda_v = pick(cfg.lambda_v, prof.lambda_v, "theory.lambda_v");
  in.r_v = pick(cfg.r_v, prof.r_v, "theory.r_v");
  in.c_v = pick(cfg.c_v, prof.c_v, "theory.c_v");
  in.l_q = pick(cfg.l_q, prof.l_q, "theory.l_q");
  in.kappa = cfg.kappa;
  in.alpha = cfg.alpha;
  in.tau = cfg.tau;
  in.x0_norm = cfg.x0_norm;
  in.w2_init = cfg.w2_init;
  in.c_mu = cfg.c_mu;
  if (!in.c_mu && (cfg.theory_potential == "quartic" || cfg.theory_potential == "gaussian")) {
    NuMoments nu;
    nu.m1 = moment_upper_bound(cfg.theory_potential, cfg.d, 1.0);
    nu.mq = moment_upper_bound(cfg.theory_potential, cfg.d, in.q_v);
    nu.mq_minus_1 = moment_upper_bound(cfg.theory_potential, cfg.d, in.q_v - 1.0);
    in.nu = nu;
  }
  return in;
}

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  return os;
}

void close_output(std::ofstream& os, const std::string& path) {
  os.close();
  if (!os) throw IoError("failed writing " + path);
}

}  // namespace

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  auto os = open_output(path);
  os << "method,scenario,moment_order,estimate,re,cv\n";
  for (const auto& r : rows) {
    os << r.method << ',' << r.scenario << ',' << format_number(r.moment_order) << ','
       << format_number(r.estimate) << ',' << format_number(r.re) << ',' << format_number(r.cv) << '\n';
  }
  close_output(os, path);
}

void write_trajectory_csv(const std::string& path, const ChainTrace& trace) {
  auto os = open_output(path);
  os << "step,x1,norm_sq,prox_iters,diverged\n";
  for (const auto& t : trace.trajectory) {
    os << t.step << ',' << format_number(t.x1) << ',' << format_number(t.norm_sq) << ',' << t.prox_iters << ','
       << (t.diverged ? 1 : 0) << '\n';
  }
  close_output(os, path);
}

std::string output_directory(const ExperimentConfig& cfg) {
  fs::path dir(cfg.output_dir);
  if (!dir.is_absolute()) {
    const char* root = std::getenv("IPLA_OUTPUT_ROOT");
    dir = fs::path(root && *root ? root : ".") / dir;
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  return dir.string();
}

namespace {

void write_effective_config(const std::string& dir, const Config& effective) {
  const std::string path = (fs::path(dir) / "effective_config.toml").string();
  auto os = open_output(path);
  os << effective.to_toml();
  close_output(os, path);
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

ChainConfig chain_config(const ExperimentConfig& cfg, SamplerKind sampler, Point x0) {
  ChainConfig cc;
  cc.sampler = sampler;
  cc.ipla.tau = cfg.tau;
  cc.ipla.kappa = cfg.kappa;
  cc.ipla.alpha = cfg.alpha;
  cc.ipla.delta = cfg.delta;
  cc.ipla.prox_max_iterations = cfg.prox_max_iterations;
  cc.ipla.warm_start = cfg.warm_start;
  cc.taming = cfg.taming;
  cc.proposal_std = cfg.proposal_std;
  cc.n_steps = cfg.n_steps;
  cc.burn_in = cfg.burn_in;
  cc.thinning = cfg.thinning;
  cc.trajectory_every = cfg.trajectory_every;
  cc.moment_orders = cfg.moments;
  cc.x0 = std::move(x0);
  return cc;
}

// Analytic moments where available, else a long Metropolis-Hastings run
// started at the minimizer.
std::vector<double> reference_moments(const ExperimentConfig& cfg, const Potential& v, std::ostream& out) {
  std::vector<double> truth;
  bool analytic = true;
  for (double m : cfg.moments) {
    try {
      truth.push_back(oracle_moment(cfg.potential, cfg.d, m));
    } catch (const std::invalid_argument&) {
      analytic = false;
      break;
    }
  }
  if (analytic) return truth;
  if (cfg.reference_steps == 0) {
    throw ConfigError("reference_steps", "no analytic moments for potential '" + cfg.potential +
                                             "'; set reference_steps > 0 for a Metropolis-Hastings reference");
  }
  ChainConfig cc = chain_config(cfg, SamplerKind::mh, v.profile().minimizer ? *v.profile().minimizer
                                                                            : Point::Zero(static_cast<Eigen::Index>(v.dim())));
  cc.n_steps = cfg.reference_steps;
  cc.burn_in = cfg.reference_steps / 10;
  cc.record_trajectory = false;
  cc.seed = mix_seed(cfg.seed, 0x5eed0000ULL);
  const ChainTrace ref = run_chain(v, nullptr, cc);
  truth.clear();
  for (double m : cfg.moments) truth.push_back(moment_estimate(ref, m));
  out << "reference: Metropolis-Hastings, " << cfg.reference_steps << " steps, acceptance "
      << format_number(static_cast<double>(ref.accepted) / static_cast<double>(ref.steps)) << "\n";
  return truth;
}

// Re-runs every sampler at each tau of cfg.tau_sweep and writes tau_sweep.csv.
void write_tau_sweep(const ExperimentConfig& cfg, const Potential& v, const ProxSolver* prox, const Point& x0,
                     const std::vector<double>& truth, const std::string& dir, std::ostream& out) {
  const std::string path = path_in(dir, "tau_sweep.csv");
  auto os = open_output(path);
  os << "tau,method,scenario,moment_order,estimate,re,cv\n";
  for (double tau : cfg.tau_sweep) {
    ExperimentConfig c = cfg;
    c.tau = tau;
    for (SamplerKind kind : cfg.samplers) {
      ChainConfig cc = chain_config(c, kind, x0);
      cc.record_trajectory = false;
      const auto traces = run_replicas(v, prox, cc, cfg.replicas, cfg.seed, cfg.workers);
      for (std::size_t j = 0; j < cfg.moments.size(); ++j) {
        std::vector<double> est;
        for (const auto& t : traces) est.push_back(moment_estimate(t, cfg.moments[j]));
        const MomentReport rep = aggregate(est, truth[j], cfg.moments[j]);
        os << format_number(tau) << ',' << to_string(kind) << ',' << cfg.scenario << ','
           << format_number(cfg.moments[j]) << ',' << format_number(rep.estimate) << ','
           << format_number(rep.re) << ',' << format_number(rep.cv) << '\n';
      }
    }
  }
  close_output(os, path);
  out << "tau sweep over " << cfg.tau_sweep.size() << " step sizes written to tau_sweep.csv\n";
}

RunReport run_moments(const ExperimentConfig& cfg, const std::string& dir, std::ostream& out) {
  const auto v = make_potential(cfg);
  const Point x0 = initial_point(cfg, *v);
  const std::vector<double> truth = reference_moments(cfg, *v, out);

  std::unique_ptr<ProxSolver> prox;
  RunReport report;
  report.output_dir = dir;
  out << std::left << std::setw(6) << "method" << std::setw(11) << "scenario" << std::setw(4) << "m"
      << std::setw(18) << "estimate" << std::setw(18) << "truth" << std::setw(14) << "RE" << std::setw(14) << "CV"
      << "diverged\n";
  for (SamplerKind kind : cfg.samplers) {
    if (kind == SamplerKind::ipla && !prox) prox = make_prox_solver(cfg.prox_solver, v, cfg.pdhg);
    const ChainConfig cc = chain_config(cfg, kind, x0);
    const auto traces = run_replicas(*v, prox.get(), cc, cfg.replicas, cfg.seed, cfg.workers);
    const std::string method = to_string(kind);
    write_trajectory_csv(path_in(dir, method + "_chain0.csv"), traces.front());
    std::size_t diverged = 0;
    for (const auto& t : traces) diverged += t.diverged_at ? 1 : 0;
    for (std::size_t j = 0; j < cfg.moments.size(); ++j) {
      std::vector<double> est;
      for (const auto& t : traces) est.push_back(moment_estimate(t, cfg.moments[j]));
      const MomentReport rep = aggregate(est, truth[j], cfg.moments[j]);
      report.rows.push_back({method, cfg.scenario, cfg.moments[j], rep.estimate, rep.re, rep.cv});
      out << std::setw(6) << method << std::setw(11) << cfg.scenario << std::setw(4)
          << format_number(cfg.moments[j]) << std::setw(18) << format_number(rep.estimate) << std::setw(18)
          << format_number(truth[j]) << std::setw(14) << format_number(rep.re) << std::setw(14)
          << format_number(rep.cv) << diverged << "/" << traces.size() << "\n";
    }
  }
  write_summary_csv(path_in(dir, "summary.csv"), report.rows);
  if (!cfg.tau_sweep.empty()) write_tau_sweep(cfg, *v, prox.get(), x0, truth, dir, out);
  return report;
}

std::string quantile_name(double q) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "quantile_%g", q);
  return buf;
}

RunReport run_deconvolution(const ExperimentConfig& cfg, const std::string& dir, std::ostream& out) {
  std::optional<Image> truth;
  if (!cfg.image_truth.empty()) {
    std::size_t side = 0;
    truth = read_pgm(cfg.image_truth, &side);
    if (side != cfg.image_side) {
      throw ConfigError("image.truth", "truth image side " + std::to_string(side) + " differs from image.side");
    }
  }
  const ImageProblem prob =
      make_problem(cfg.image_side, cfg.image_depth, cfg.image_sigma, cfg.image_beta, cfg.seed, truth);
  DeconvolutionSettings s;
  s.tau = cfg.tau;
  s.delta = cfg.delta ? *cfg.delta : cfg.kappa * std::pow(cfg.tau, 1.0 + cfg.alpha);
  s.n_steps = cfg.n_steps;
  s.burn_in = cfg.burn_in;
  s.thinning = cfg.thinning;
  s.prox_max_iterations = cfg.prox_max_iterations;
  s.pdhg = cfg.pdhg;
  s.warm_start = cfg.warm_start;
  s.max_failure_rate = cfg.max_failure_rate;
  s.seed = mix_seed(cfg.seed, 1);
  s.start = cfg.image_start;
  s.quantiles = cfg.quantiles;
  const DeconvolutionResult res = deconvolve_sample(prob, s);

  const std::size_t n = cfg.image_side;
  write_pgm(path_in(dir, "truth.pgm"), prob.truth, n);
  write_pgm(path_in(dir, "observed.pgm"), prob.observed, n);
  write_pgm(path_in(dir, "mean.pgm"), res.mean, n);
  write_raw(path_in(dir, "observed.raw"), prob.observed, n);
  write_raw(path_in(dir, "mean.raw"), res.mean, n);
  for (const auto& [q, img] : res.quantiles) {
    write_pgm(path_in(dir, quantile_name(q) + ".pgm"), img, n);
    write_raw(path_in(dir, quantile_name(q) + ".raw"), img, n);
  }
  write_trajectory_csv(path_in(dir, "ipla_chain0.csv"), res.trace);

  const std::string metrics_path = path_in(dir, "image_metrics.csv");
  auto os = open_output(metrics_path);
  os << "metric,value\n"
     << "rmse_mean," << format_number(res.rmse_mean) << "\n"
     << "rmse_observed," << format_number(res.rmse_observed) << "\n"
     << "samples," << res.samples << "\n"
     << "prox_iterations," << res.prox_iterations << "\n"
     << "prox_failures," << res.prox_failures << "\n";
  close_output(os, metrics_path);

  RunReport report;
  report.output_dir = dir;
  const double mean_sq = res.mean.squaredNorm();
  report.rows.push_back({"ipla", to_string(cfg.image_start), 2.0, mean_sq, std::nan(""), std::nan("")});
  write_summary_csv(path_in(dir, "summary.csv"), report.rows);
  out << "deconvolution " << n << "x" << n << ", depth " << cfg.image_depth << ", sigma "
      << format_number(cfg.image_sigma) << ", beta " << format_number(cfg.image_beta) << "\n"
      << "rmse(observed, truth)       " << format_number(res.rmse_observed) << "\n"
      << "rmse(posterior mean, truth) " << format_number(res.rmse_mean) << "\n"
      << "samples " << res.samples << ", prox iterations " << res.prox_iterations << ", prox failures "
      << res.prox_failures << "\n";
  return report;
}

struct TheoryRow {
  std::string quantity;
  std::string argument;
  double value;
};

RunReport run_theory(const ExperimentConfig& cfg, const std::string& dir, std::ostream& out) {
  const TheoryInputs in = theory_inputs(cfg);
  std::vector<TheoryRow> rows;
  std::vector<std::string> notes;
  auto attempt = [&](const std::string& q, const std::string& arg, const auto& fn) {
    try {
      rows.push_back({q, arg, fn()});
    } catch (const std::exception& e) {
      rows.push_back({q, arg, std::nan("")});
      notes.push_back(q + (arg.empty() ? "" : "(" + arg + ")") + ": " + e.what());
    }
  };
  rows.push_back({"delta", "", theory_delta(in)});
  attempt("k_tau", format_number(in.tau), [&] { return k_tau(in).value; });
  attempt("linear_constant", "", [&] { return k_tau(in).linear_constant; });
  attempt("linear_bound", format_number(in.tau), [&] { return k_tau(in).linear_bound; });
  for (double m : cfg.theory_moments) {
    attempt("moment_constant", format_number(m), [&] { return moment_constant(in, m); });
  }
  for (double m : cfg.theory_moments) {
    rows.push_back({"noise_constant", format_number(m), noise_moment_constant(m)});
  }
  attempt("c_mu", "", [&] { return c_mu_star(in); });
  for (double e : cfg.eps) {
    const std::string arg = format_number(e);
    attempt("kl_tau", arg, [&] { return kl_budget(in, e).tau; });
    attempt("kl_n", arg, [&] { return kl_budget(in, e).n; });
    attempt("w2_tau", arg, [&] { return w2_budget(in, e).tau; });
    attempt("w2_n", arg, [&] { return w2_budget(in, e).n; });
  }

  const std::string path = path_in(dir, "summary.csv");
  auto os = open_output(path);
  os << "quantity,argument,value\n";
  for (const auto& r : rows) os << r.quantity << ',' << r.argument << ',' << format_number(r.value) << '\n';
  close_output(os, path);

  out << "d=" << format_number(in.d) << " q_v=" << format_number(in.q_v) << " lambda_v=" << format_number(in.lambda_v)
      << " r_v=" << format_number(in.r_v) << " c_v=" << format_number(in.c_v) << " l_q=" << format_number(in.l_q)
      << " kappa=" << format_number(in.kappa) << " alpha=" << format_number(in.alpha)
      << " tau=" << format_number(in.tau) << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(18) << r.quantity << std::setw(10) << r.argument << format_number(r.value) << "\n";
  }
  for (const auto& n : notes) out << "note: " << n << "\n";
  RunReport report;
  report.output_dir = dir;
  return report;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg, const Config& effective, std::ostream& out) {
  const std::string dir = output_directory(cfg);
  write_effective_config(dir, effective);
  if (cfg.experiment == "example3") return run_deconvolution(cfg, dir, out);
  if (cfg.experiment == "theory") return run_theory(cfg, dir, out);
  if (cfg.experiment == "prox_bench") return run_prox_bench(cfg, effective, out);
  return run_moments(cfg, dir, out);
}

RunReport run_prox_bench(const ExperimentConfig& cfg, const Config& effective, std::ostream& out) {
  const std::string dir = output_directory(cfg);
  write_effective_config(dir, effective);
  const auto v = make_potential(cfg);
  std::unique_ptr<ProxSolver> exact;
  if (cfg.potential == "quartic" || cfg.potential == "gaussian") exact = make_prox_solver("exact", v);

  RandomStream rng(cfg.seed);
  std::vector<Point> points;
  for (std::size_t t = 0; t < cfg.bench_trials; ++t) {
    Point x(static_cast<Eigen::Index>(v->dim()));
    rng.fill_normal(x);
    points.push_back(2.0 * x);
  }

  const std::string path = path_in(dir, "prox_bench.csv");
  auto os = open_output(path);
  os << "solver,delta,mean_iterations,max_iterations,max_error_bound,max_exact_gap,converged_fraction\n";
  out << std::left << std::setw(8) << "solver" << std::setw(10) << "delta" << std::setw(12) << "mean_it"
      << std::setw(10) << "max_it" << std::setw(16) << "max_bound" << std::setw(16) << "max_gap" << "converged\n";
  for (const auto& name : cfg.bench_solvers) {
    std::unique_ptr<ProxSolver> solver;
    try {
      solver = make_prox_solver(name, v, cfg.pdhg);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("bench.solvers", e.what());
    }
    for (double delta : cfg.bench_deltas) {
      double total_it = 0.0, max_it = 0.0, max_bound = 0.0, max_gap = exact ? 0.0 : std::nan("");
      std::size_t converged = 0;
      for (const auto& x : points) {
        ProxRequest req;
        req.x = x;
        req.tau = cfg.tau;
        req.delta = delta;
        req.max_iterations = cfg.prox_max_iterations;
        const ProxResult r = solver->solve(req);
        total_it += static_cast<double>(r.iterations);
        max_it = std::max(max_it, static_cast<double>(r.iterations));
        max_bound = std::max(max_bound, r.error_bound);
        converged += r.converged ? 1 : 0;
        if (exact) max_gap = std::max(max_gap, (r.point - exact->solve(req).point).norm());
      }
      const double count = static_cast<double>(points.size());
      os << name << ',' << format_number(delta) << ',' << format_number(total_it / count) << ','
         << format_number(max_it) << ',' << format_number(max_bound) << ',' << format_number(max_gap) << ','
         << format_number(static_cast<double>(converged) / count) << '\n';
      out << std::setw(8) << name << std::setw(10) << format_number(delta) << std::setw(12)
          << format_number(total_it / count) << std::setw(10) << format_number(max_it) << std::setw(16)
          << format_number(max_bound) << std::setw(16) << format_number(max_gap)
          << format_number(static_cast<double>(converged) / count) << "\n";
    }
  }
  close_output(os, path);
  RunReport report;
  report.output_dir = dir;
  return report;
}

}  // namespace ipla
