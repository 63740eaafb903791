#pragma once

// Macro-scale Stokes solves on the 2D rough-annulus model: rough wall,
// zeroth-order Dirichlet wall-law, effective Navier wall-law, and the
// corrector-augmented first-order approximation, plus the error norms
// between them.
//
// Discretization: boundary-fitted curvilinear staggered grid in (a, s) with
// theta = a and r = m(a,s) = r_in(a) + rho(s) (R - r_in(a)), where rho is an
// exponential radial grading clustering cells at the inner wall. Pressure
// sits at cell centers, u_r at radial faces, u_theta at angular faces. The
// saddle system is solved directly (sparse LU) with a Lagrange multiplier
// pinning the pressure mean.
//
// When the geometry, data, and roughness are invariant under rotation by one
// roughness period, the solve can be restricted to a single-period sector
// with periodic conditions (sector mode) -- the full-annulus solution is the
// periodic extension.

#include <functional>
#include <string>
#include <vector>

#include "roughflow/cell_solver.hpp"
#include "roughflow/geometry.hpp"
#include "roughflow/saddle.hpp"
#include "roughflow/slip_field.hpp"

namespace roughflow {

enum class MacroVariant { Rough, Dirichlet, Navier, Corrector };

struct MacroProblemSpec {
  AnnulusDomain domain;  // rough geometry; non-Rough variants use its smooth circle
  MacroVariant variant = MacroVariant::Dirichlet;
  bool sector = true;        // solve one roughness period (requires invariant data)
  int radial_cells = 192;
  int angular_cells = 0;     // 0: cells_per_period (sector) or n_periods * that
  double wall_spacing = 0.0; // target radial spacing at the wall; 0 => auto

  // data (all optional; defaults give the rotating-outer-wall problem)
  std::function<Eigen::Vector2d(double, double)> body_force;  // (theta, r) -> (f_r, f_theta)
  std::function<double(double)> outer_u_theta;  // default 1
  std::function<double(double)> outer_u_r;      // default 0 (must have zero net flux)
  std::function<double(double)> inner_u_theta;  // Corrector-variant wall data
  std::function<double(double)> inner_u_r;      // default 0

  double constant_slip = 0.0;     // Navier: used if use_constant_slip
  bool use_constant_slip = false;
  double tolerance = 1e-10;
};

struct MacroGrid {
  int na = 0, ns = 0;
  double da = 0, ds = 0;
  double P = 0;        // angular extent of the computational domain
  int n_sectors = 1;   // full domain = n_sectors copies of the sector
  double kappa = 0;    // radial grading strength (0 = uniform)
  double s_cut = 1.0;  // wall-perturbation blending extent in s
  double inner = 1, outer = 2, eps = 0;
  bool rough_wall = false;
  AnnulusDomain dom;

  double rho(double s) const;
  double drho(double s) const;
  double rin(double a) const;   // inner radius of the computational wall
  double drin(double a) const;
  // Radial map r = m(a, s): the smooth graded map from the reference circle,
  // plus the wall perturbation rin(a) - inner faded out over s < s_cut. The
  // fade keeps the grid of a rough solve identical to the smooth-wall grid
  // outside the boundary-layer region, so bulk discretization errors cancel
  // in rough-vs-effective comparisons.
  double wfade(double s) const {
    if (s >= s_cut) return 0.0;
    const double t = s / s_cut;
    return (1.0 - t) * (1.0 - t) * (1.0 + 2.0 * t);
  }
  double dwfade(double s) const {
    if (s >= s_cut) return 0.0;
    const double t = s / s_cut;
    return -6.0 * t * (1.0 - t) / s_cut;
  }
  double m(double a, double s) const {
    return inner + rho(s) * (outer - inner) + wfade(s) * (rin(a) - inner);
  }
  double ms(double a, double s) const {
    return drho(s) * (outer - inner) + dwfade(s) * (rin(a) - inner);
  }
  double ma(double a, double s) const { return wfade(s) * drin(a); }
  double s_of_r(double a, double r) const;  // inverse of m in s

  int id_u(int i, int k) const { return i + na * k; }            // k in [0, ns]
  int id_v(int i, int k) const { return i + na * k; }            // k in [0, ns)
  int id_p(int i, int k) const { return i + na * k; }            // k in [0, ns)
  double a_u(int i) const { return (i + 0.5) * da; }
  double a_v(int i) const { return i * da; }
  double a_p(int i) const { return (i + 0.5) * da; }
  double s_u(int k) const { return k * ds; }
  double s_v(int k) const { return (k + 0.5) * ds; }
  double s_p(int k) const { return (k + 0.5) * ds; }
};

struct MacroSolution {
  MacroVariant variant = MacroVariant::Dirichlet;
  MacroProblemSpec spec;
  MacroGrid grid;
  std::vector<double> u;  // radial velocity at radial faces, na*(ns+1)
  std::vector<double> v;  // azimuthal velocity at angular faces, na*ns
  std::vector<double> p;  // pressure at centers, mean zero, na*ns
  // ghost rows for boundary-consistent interpolation (filled post-solve)
  std::vector<double> v_ghost_lo, v_ghost_hi;  // na each
  double divergence_residual = 0.0;
  SolveStats stats;

  // polar velocity (u_r, u_theta) / pressure at a physical point (bilinear in
  // the solution's own computational coordinates; theta periodic)
  Eigen::Vector2d velocity_polar(double theta, double r) const;
  double pressure_at(double theta, double r) const;
};

MacroSolution solve_macro(const MacroProblemSpec& spec,
                          const SlipField* slip = nullptr);

// Wall traces from a smooth-wall solution: chi1 = d u_theta / d nu = -d u_theta/d r
// and chi2 = -p, both at r = inner, sampled at uniform angles (second-order
// one-sided extrapolation from the fluid side).
struct WallTraces {
  double period = 0;
  std::vector<double> chi1, chi2;  // at angles period*j/size
  double chi1_at(double theta) const;
  double chi2_at(double theta) const;
};
WallTraces extract_wall_traces(const MacroSolution& sol);

// First-order correctors: the oscillating part is assembled from the cell
// fluctuations scaled by the wall traces; the non-oscillating part is eps
// times an auxiliary smooth-annulus Stokes solve carrying the slip data.
struct CorrectorBundle {
  double eps = 0;
  double slip_coefficient = 0;  // scalar c^bl of the tangential cell solve
  WallTraces traces;
  MacroSolution dirichlet;  // the zeroth-order solution being corrected
  MacroSolution eta;        // auxiliary solve (Corrector variant)
  CellSolution beta_tau;    // cell solution, lambda = tangential frame leg
  CellSolution beta_nu;     // cell solution, lambda = normal frame leg

  Eigen::Vector2d eta_eps(double theta, double r) const;      // oscillating
  Eigen::Vector2d eta_bar_eps(double theta, double r) const;  // eps * eta
  Eigen::Vector2d augmented(double theta, double r) const;    // dirichlet + both
};

CorrectorBundle build_correctors(const MacroSolution& dirichlet_sol,
                                 const CellSolution& beta_tau,
                                 const CellSolution& beta_nu);

// ---- norms -------------------------------------------------------------------

struct FieldNorms {
  double l2 = 0, h1semi = 0, w11 = 0;
};

// Velocity sampler over the annulus: polar components as a function of
// (theta, r), periodic over `period` repeated n_sectors times.
struct FieldSampler {
  std::function<Eigen::Vector2d(double, double)> vel;
  double period = 0;
  int n_sectors = 1;
};
FieldSampler sampler(const MacroSolution& sol);

// Quadrature/differencing resolution for norm evaluation.
struct NormQuadrature {
  int na = 64;               // angular points per sector period
  int ns = 256;              // radial points
  double wall_spacing = 0.0; // radial grading target at r_lo; 0 => uniform
};

// Norms of (a - b) over the annular region r in [r_lo, r_hi]; gradients by
// centered differences of the sampled polar components on the common grid.
FieldNorms error_norms(const FieldSampler& a, const FieldSampler& b,
                       double r_lo, double r_hi, const NormQuadrature& quad);
FieldNorms field_norms(const FieldSampler& a, double r_lo, double r_hi,
                       const NormQuadrature& quad);

}  // namespace roughflow
