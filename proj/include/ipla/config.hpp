#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ipla/imaging.hpp"
#include "ipla/potentials.hpp"
#include "ipla/prox.hpp"
#include "ipla/samplers.hpp"
#include "ipla/types.hpp"

namespace ipla {

enum class ValueKind { string, number, boolean, array };

struct ConfigEntry {
  std::string value;  // arrays: comma-joined items
  ValueKind kind = ValueKind::string;
  int line = 0;       // 0 for defaults and command-line values
};

/// Flat dotted-key configuration ("prox.solver") read from a TOML subset:
/// [section] headers, key = value lines with strings, numbers, booleans
/// and one-line arrays, and # comments.
class Config {
 public:
  static Config parse_toml(const std::string& text);
  static Config load_file(const std::string& path);

  void set(const std::string& key, ConfigEntry entry);
  /// Command-line value: booleans and numbers are recognised, anything
  /// else is a string.
  void set_untyped(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const ConfigEntry& entry(const std::string& key) const;
  const std::map<std::string, ConfigEntry>& entries() const { return entries_; }

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

  /// Overlays `other` on this config.
  void merge(const Config& other);

  /// TOML text with top-level keys first, then one table per section.
  std::string to_toml() const;

 private:
  std::map<std::string, ConfigEntry> entries_;
};

/// Every recognised key with its default for the given experiment.
Config default_config(const std::string& experiment);

/// Maps a command-line flag name (dashes allowed, section optional when the
/// leaf name is unique) to a canonical key.
std::string resolve_key(const std::string& flag);

struct ExperimentConfig {
  std::string experiment;  // example1, example2, example3, theory, custom
  std::vector<SamplerKind> samplers;
  std::string scenario;    // tail, minimizer
  std::size_t d = 10;
  double tau = 0.1;
  std::size_t n_steps = 0;
  std::size_t burn_in = 0;
  std::size_t thinning = 1;
  std::size_t replicas = 1;
  std::uint64_t seed = 1;
  std::size_t workers = 0;
  std::string output_dir;
  std::size_t trajectory_every = 100;
  Taming taming = Taming::tau;
  double proposal_std = 0.0;
  std::vector<double> moments;
  std::size_t reference_steps = 0;
  std::vector<double> tau_sweep;  // extra step sizes for tau_sweep.csv

  std::string potential;  // gaussian, quartic, ginzburg_landau, deconvolution
  GinzburgLandauParams gl;

  std::string prox_solver;
  double kappa = 1.0;
  double alpha = 1.0;
  std::optional<double> delta;
  std::size_t prox_max_iterations = 10000;
  bool warm_start = false;
  PdhgOptions pdhg;

  std::size_t image_side = 64;
  std::size_t image_depth = 9;
  double image_sigma = 0.5;
  double image_beta = 0.03;
  ImageStart image_start = ImageStart::backprojection;
  double max_failure_rate = 0.05;
  std::vector<double> quantiles;
  std::string image_truth;  // optional PGM path

  std::string theory_potential;  // quartic, gaussian, ginzburg_landau, none
  std::optional<double> q_v, lambda_v, r_v, c_v, l_q;
  double x0_norm = 0.0;
  double w2_init = 1.0;
  std::vector<double> eps;
  std::vector<double> theory_moments;
  std::optional<double> c_mu;

  std::size_t bench_trials = 100;
  std::vector<double> bench_deltas;
  std::vector<std::string> bench_solvers;
};

/// Merges the user's keys over the experiment defaults, rejecting unknown
/// keys, and converts to typed form. `effective` receives the merged config.
ExperimentConfig resolve_config(const Config& user, Config* effective = nullptr);

}  // namespace ipla
