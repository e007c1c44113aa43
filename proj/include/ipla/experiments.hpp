#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "ipla/config.hpp"
#include "ipla/potentials.hpp"
#include "ipla/samplers.hpp"
#include "ipla/theory.hpp"

namespace ipla {

struct SummaryRow {
  std::string method;
  std::string scenario;
  double moment_order = 0.0;
  double estimate = 0.0;
  double re = 0.0;
  double cv = 0.0;
};

/// %.10g, with NaN written as "NaN".
std::string format_number(double v);

std::shared_ptr<const Potential> make_potential(const ExperimentConfig& cfg);

/// tail: 7 * ones for the quartic/Gaussian, (100, 0, ..., 0) for
/// Ginzburg-Landau; minimizer: the potential's minimizer.
Point initial_point(const ExperimentConfig& cfg, const Potential& v);

/// Theory inputs from the config; metadata comes from theory.potential
/// unless overridden by the theory.* keys.
TheoryInputs theory_inputs(const ExperimentConfig& cfg);

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);
void write_trajectory_csv(const std::string& path, const ChainTrace& trace);

/// Output directory: output_dir itself when absolute, otherwise relative to
/// $IPLA_OUTPUT_ROOT (or the working directory). Created if missing.
std::string output_directory(const ExperimentConfig& cfg);

struct RunReport {
  std::string output_dir;
  std::vector<SummaryRow> rows;
};

/// Runs the configured experiment, writing CSV/PGM outputs and the effective
/// config into the output directory and a table to `out`.
RunReport run_experiment(const ExperimentConfig& cfg, const Config& effective, std::ostream& out);

/// Prox solver benchmark: iterations and certified errors per solver and delta.
RunReport run_prox_bench(const ExperimentConfig& cfg, const Config& effective, std::ostream& out);

}  // namespace ipla
