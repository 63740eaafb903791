#pragma once

// Boundary-layer cell problem on the truncated periodic half-cylinder
//   Z = [0,1)^{d-1} x [-L, gamma(y')]:
//     -div(A grad beta) + B grad omega = -lambda * delta_S   (momentum)
//     div(B^T beta) = 0                                      (constraint)
// with no-slip on the rough top {y_d = gamma(y')}, lateral periodicity, and
// an absorbing bottom cut (homogeneous Neumann on beta, omega pinned to 0 at
// y_d = -L). The far-field constant of beta below the interface S = {y_d = 0}
// is the slip vector c^bl.
//
// Discretization: staggered (MAC) grid, assembled in integrated (volume-
// weighted) form so the momentum block is symmetric and the pressure-gradient
// block is exactly the transpose of the discrete divergence. The interface
// load is the finite-volume image of the surface delta: the full weight on
// the normal-velocity node sitting on S, half weights on the two tangential
// rows adjacent to S (exact for the flat-wall solution).

#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "roughflow/geometry.hpp"
#include "roughflow/saddle.hpp"

namespace roughflow {

struct CellProblemSpec {
  CellCoefficients coeffs;
  RoughnessProfile profile;  // slow variable frozen at coeffs.base_point
  Vec jump_vector;           // lambda in R^d
  double truncation_depth = 0.0;  // L; <= 0 selects max(3, ceil(18.5/alpha))
  int resolution = 32;            // lateral cells per unit length
  double tolerance = 1e-10;       // saddle-solve relative residual contract

  double auto_depth() const;  // the default-L rule above
};

struct CellGrid {
  int d = 2;        // ambient dimension
  int n = 0;        // lateral cells per direction (h = 1/n)
  int nv = 0;       // vertical cells
  int kS = 0;       // vertical FACE index of the interface S (y_d = 0)
  double h = 0.0;
  double depth = 0.0;   // L (grid-aligned)
  double height = 0.0;  // top of grid above S (>= max gamma)

  int n_lat_nodes() const;              // n^(d-1)
  double y_center(int k) const { return -depth + (k + 0.5) * h; }
  double y_face(int k) const { return -depth + k * h; }
};

struct CellSolution {
  CellProblemSpec spec;
  CellGrid grid;

  // beta[c] over the full structured grid (lateral-major flat index; masked
  // nodes hold 0 = the no-slip value). Components c < d-1 live on lateral
  // faces / vertical centers (nv layers); component d-1 on vertical faces
  // (nv+1 layers). omega on cell centers, gauged mean-zero over y_d < 0.
  std::vector<std::vector<double>> beta;
  std::vector<double> omega;
  std::vector<std::vector<char>> beta_fluid;
  std::vector<char> cell_fluid;

  Vec bl_constant;  // interface average of beta over S
  std::vector<std::pair<double, double>> decay_samples;  // (y_d, ||beta - c^bl||_L2(Z'))

  double divergence_residual = 0.0;  // max per-cell |div(B^T beta)|
  double momentum_residual = 0.0;    // relative residual of the full saddle system
  SolveStats stats;

  // flat index helpers (i = lateral indices, periodic; k = vertical layer)
  int lat_index(const std::vector<int>& i) const;
  int node_index(int lat, int k) const { return k * grid.n_lat_nodes() + lat; }
};

CellSolution solve_cell(const CellProblemSpec& spec);

// Interface average of beta over S (the c^bl extraction); deep_average reads
// the near-bottom layers instead (agrees up to e^{-alpha L} + O(h^2)).
Vec boundary_layer_constant(const CellSolution& sol);
Vec deep_average(const CellSolution& sol);

// ---- Fourier mode oracle (flat region y_d < 0) -----------------------------

// Interface trace in lateral Fourier space: trace(m, c) = c-th component of
// c_m^0, with modes enumerated by wavenumber() below.
struct ModeTrace {
  int d = 2;
  int n = 0;                 // modes per lateral direction
  Eigen::MatrixXcd coeffs;   // (n^(d-1)) x d
  Eigen::VectorXcd pressure; // optional interface pressure trace (unused by the oracle)
};

// Collocates beta at cell centers on S (second-order averages) and DFTs it.
ModeTrace interface_trace(const CellSolution& sol);

// Evaluates the closed-form decaying modes at vertical offset y < 0:
//   c_m(y) = (c_m^0 - 2 pi sqrt(xi_m) y dtilde_m^0 v_m) e^{2 pi sqrt(xi_m) y},
//   d_m(y) = -4 pi sqrt(xi_m) dtilde_m^0 e^{2 pi sqrt(xi_m) y},
// with v_m = B (i m / sqrt(xi_m), 1)^T, dtilde_m^0 = c_m^0 . v_m and
// xi_m = m . A' m (tangential block). Mode 0 passes through unchanged
// (constant c^bl, zero pressure).
struct ModePrediction {
  Eigen::MatrixXcd velocity;  // modes x d
  Eigen::VectorXcd pressure;  // modes
};
ModePrediction mode_oracle(const CellCoefficients& coeffs, const ModeTrace& trace,
                           double y);

// Cross-validation: reconstructs the field below S from the solution's own
// interface trace and returns relative L2 errors over y_d in [depth_lo, 0).
struct ModeOracleErrors {
  double velocity_rel_l2 = 0.0;      // full field
  double fluctuation_rel_l2 = 0.0;   // mode-0 removed from both fields
  double pressure_abs_l2 = 0.0;
};
ModeOracleErrors mode_oracle_errors(const CellSolution& sol, double depth_lo);

// ---- slip matrix / energy route --------------------------------------------

// Orthonormal tangent frame at the base point; d-1 columns, each in R^d.
Mat default_tangent_frame(const CellCoefficients& coeffs);
Mat rotate_tangent_frame(const CellCoefficients& coeffs, const Mat& frame, double angle);

// Solves the cell problem for each frame vector and assembles
// c_lk = c^bl(lambda^(l)) . lambda^(k); (d-1)x(d-1), symmetric negative
// definite for min gamma > 0.
Mat slip_matrix(const CellCoefficients& coeffs, const RoughnessProfile& profile,
                const Mat& tangent_frame, int resolution, double depth = 0.0);

// Same matrix through the independent energy route
// -(B grad beta^k, B grad beta^l) by midpoint quadrature with cut-aware,
// interface-side-aware gradient reconstruction.
Mat energy_matrix(const std::vector<CellSolution>& solutions);

// ---- diagnostics ------------------------------------------------------------

struct DecayFit {
  bool has_signal = false;  // false when the fluctuation sits at noise level
  double rate = 0.0;        // measured exponent of e^{rate * y_d}
  double fit_residual = 0.0;
};
DecayFit decay_fit(const CellSolution& sol);
DecayFit decay_fit_samples(const std::vector<std::pair<double, double>>& samples);

// Discrete normal flux integral(Z') beta . nu dy' at each horizontal face
// level y_d <= 0, evaluated with the solver's own face fluxes (returns
// (y_face, flux) pairs; exactly zero up to roundoff by mass conservation).
std::vector<std::pair<double, double>> normal_flux_profile(const CellSolution& sol);

// L2(S) norm of [d beta/d y_d - omega nu]_S - lambda from one-sided
// differences at the face plane y_d = plane_y (default the interface).
double jump_residual(const CellSolution& sol, const Vec& lambda, double plane_y = 0.0);

// Shifted-interface solution: beta unchanged for y_d > 0, beta + lambda*y_d
// on (b, 0], beta + b*lambda below; omega unchanged; b snapped to the nearest
// grid face strictly between -L and 0.
CellSolution shift_solution(const CellSolution& sol, double b);

// 2D only: bilinear sample of the fluctuation beta - c^bl at (y1, y2), y1
// periodic. Returns 0 below the truncation and -c^bl inside the wall.
Eigen::Vector2d sample_fluctuation_2d(const CellSolution& sol, double y1, double y2);

}  // namespace roughflow
