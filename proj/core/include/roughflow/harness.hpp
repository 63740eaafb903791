#pragma once

// Experiment orchestration: key=value configuration, log-log rate fitting,
// the end-to-end convergence pipeline (cell solves -> slip constant -> per-eps
// macro solves -> error norms -> fitted rates and verdicts), and the slip
// constant extraction the pipeline uses.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "roughflow/cell_solver.hpp"
#include "roughflow/geometry.hpp"
#include "roughflow/macro_solver.hpp"

namespace roughflow {

// Flat key = value text: one pair per line, '#' starts a comment, blank lines
// ignored. Unknown keys are preserved (callers decide what they mean).
struct Config {
  std::map<std::string, std::string> kv;

  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const { return kv.count(key) != 0; }
  std::string get_str(const std::string& key, const std::string& dflt = "") const;
  double get_double(const std::string& key, double dflt) const;
  int get_int(const std::string& key, int dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;
  // comma-separated values; entries may be fractions like "1/16"
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& dflt) const;
};

struct RateFit {
  double slope = 0;
  double residual = 0;   // rms deviation of log(error) from the fit line
  int points_used = 0;   // non-positive errors (solver floor) are excluded
};
RateFit fit_rate(const std::vector<std::pair<double, double>>& pairs);

struct ExperimentConfig {
  // geometry
  double inner_radius = 1.0, outer_radius = 2.0;
  std::string profile_kind = "cosine";
  double amplitude = 0.25;

  // data (the default is the rotating-outer-wall problem)
  double outer_velocity = 1.0;

  // cell stage
  int cell_resolution = 128;       // base lateral resolution
  int richardson_resolution = 160; // second resolution for extrapolation; 0 = off
  int phase_count = 4;             // lateral sub-cell phase averages; 1 = off
  double cell_depth = 0.0;         // <= 0: auto
  double tolerance = 1e-10;

  // macro stage
  std::vector<double> eps_list{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
  int cells_per_period = 256;
  int radial_cells = 448;
  double wall_spacing_divisor = 128;  // wall spacing = eps / divisor
  bool build_corrector = true;

  // norm quadrature
  int quad_na = 128, quad_ns = 512;
  double quad_wall_divisor = 16;

  std::string out_dir;
  std::uint64_t seed = 42;
  int threads = 1;

  static ExperimentConfig from(const Config& cfg);
  void validate() const;  // halving eps list, >= 8 cells per period, ...
};

struct ConvergenceRow {
  double eps = 0;
  FieldNorms dirichlet;  // rough vs zeroth-order wall-law
  FieldNorms navier;     // rough vs effective wall-law
  FieldNorms corrector;  // rough vs corrector-augmented (zeros when disabled)
  FieldNorms eta;        // size of the oscillating corrector itself
  double wall_time_s = 0;
};

struct RateVerdict {
  std::string name;
  double slope = 0, residual = 0;
  double target = 0, tolerance = 0;
  bool pass = false;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::vector<RateVerdict> verdicts;
  double slip_constant = 0;  // the constant fed to the navier/corrector solves
  bool degenerate = false;   // zero-data run: errors vacuous, verdicts skipped
  bool corrector_below_dirichlet = true;  // strict, at every eps (when built)
};

ConvergenceReport run_pipeline(const ExperimentConfig& config);

// The pipeline's slip-constant extraction: the staircase error of the rough
// top is oscillatory in the lateral grid phase, and the constant is invariant
// under lateral shifts, so averaging over `phases` sub-cell shifts leaves a
// smooth second-order error; Richardson extrapolation over (n_lo, n_hi)
// removes that. With phases = 1 and n_hi = 0 this degrades to a single solve.
double extrapolated_slip_constant(const CellCoefficients& coeffs,
                                  const RoughnessProfile& profile, int n_lo,
                                  int n_hi, int phases, double tolerance = 1e-10);

}  // namespace roughflow
