#pragma once

// Boundary geometry: charts of the smooth fictitious surface, the tube map,
// roughness profiles, and the chart-induced coefficient matrices A = B^T B
// that the cell problem inherits from the surface metric.

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "roughflow/errors.hpp"

namespace roughflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Analytic chart of a (d-1)-surface in R^d. Parameter domain is a box in
// R^{d-1}; map/jacobian/normal are closed-form (no numerical differentiation
// on the chart itself).
struct Chart {
  int ambient_dim = 3;  // d in {2,3}
  std::string kind;
  std::function<Vec(const Vec&)> map;       // phi : R^{d-1} -> R^d
  std::function<Mat(const Vec&)> jacobian;  // Dphi : d x (d-1)
  std::function<Vec(const Vec&)> normal;    // outward unit normal at phi(x')
  Vec param_lo, param_hi;                   // parameter rectangle

  int surface_dim() const { return ambient_dim - 1; }
};

// Built-in chart families. Arbitrary user charts can be constructed by
// filling a Chart struct directly; these cover the validation suite.
Chart make_plane_chart(int ambient_dim);                    // identity graph, normal e_d
Chart make_stretched_plane_chart(double sx, double sy);     // phi = (sx*x1, sy*x2, 0)
Chart make_sphere_chart();                                  // unit sphere, polar coords
// Circle / cylinder walls parameterized by angle; the normal points into the
// enclosed solid (roughness grows toward the axis), the inner-wall convention.
Chart make_circle_chart(double radius);                     // 2D circle
Chart make_cylinder_chart(double radius);                   // axis-aligned cylinder in R^3

struct SurfacePatch {
  Chart chart;
  double tube_halfwidth = 0.5;  // delta
  int patch_id = 0;
};

// Roughness height gamma(x', y') >= 0, 1-periodic in each fast coordinate
// y'. slow = chart coordinates of the base point, fast = cell coordinates.
struct RoughnessProfile {
  std::string kind;
  double amplitude = 0.0;
  double bound_M = 0.0;  // sup gamma <= M
  std::function<double(const Vec& slow, const Vec& fast)> height;
  // Analytic d(gamma)/d(fast_1), used for boundary-fitted metric terms.
  // May be empty; callers fall back to central differences.
  std::function<double(const Vec& slow, const Vec& fast)> d_height_dfast1;

  double operator()(const Vec& slow, const Vec& fast) const { return height(slow, fast); }
};

RoughnessProfile make_constant_profile(double height);
// gamma = 0.5*a*(1 + cos(2*pi*y1)); peak a, touches zero. Riblet grooves:
// independent of y2 in 3D.
RoughnessProfile make_cosine_profile(double amplitude);
// Slow-modulated riblet: gamma = 0.5*a*(1 + 0.5*sin(2*pi*x1))*(1 + cos(2*pi*y1)).
RoughnessProfile make_two_scale_profile(double amplitude);

// Chart-induced coefficients of the cell problem at a base point.
// A = B^T B with B = (Dphi, nu)^{-T} has the block structure
// [[ (Dphi^T Dphi)^{-1}, 0 ], [ 0, 1 ]]. The stored B is the symmetric polar
// factor sqrt(A): the cell problem is posed in wall-aligned coordinates
// (e_1..e_{d-1} along the chart tangents, e_d along the normal), which is a
// rigid rotation of the ambient frame and leaves A unchanged. All cell-level
// vectors (jumps, boundary-layer constants, tangent frames) live in these
// aligned coordinates.
struct CellCoefficients {
  int dim = 3;  // d
  Mat B;        // d x d
  Mat A;        // d x d, SPD
  Vec base_point;

  Mat tangential_block() const { return A.topLeftCorner(dim - 1, dim - 1); }
  Vec normal_vector() const { return B.col(dim - 1); }  // B e_d = nu(phi(x'))
};

CellCoefficients metric_matrices(const SurfacePatch& patch, const Vec& base_point);

// Coefficients given directly (for randomized/property tests). Validates the
// block structure and positive definiteness.
CellCoefficients make_cell_coefficients(const Mat& B, const Vec& base_point = Vec());

Vec tube_point(const SurfacePatch& patch, const Vec& base_point, double t);

// alpha = pi * sqrt(lambda_min of the tangential block of A): every lateral
// Fourier mode m != 0 of the cell problem decays at least like e^{alpha*y_d}.
double decay_rate_bound(const CellCoefficients& coeffs);

// 2D rough annulus: roughness carved outward of the fictitious circle
// r = inner_radius, i.e. the wetted inner boundary is
//   r(theta) = inner_radius - eps * gamma(theta, theta/eps).
// The requested eps is snapped to eps_eff = 2*pi/n_periods so the roughness
// closes up around the circle; eps == 0 gives the perfect annulus.
struct AnnulusDomain {
  double inner_radius = 1.0;
  double outer_radius = 2.0;
  double eps = 0.0;    // effective scale 2*pi/n_periods (0 = smooth)
  int n_periods = 0;
  RoughnessProfile profile;  // unused when eps == 0
  int cells_per_period = 8;  // angular resolution rule for the rough solve

  bool smooth() const { return eps == 0.0 || n_periods == 0; }
  double gap() const { return outer_radius - inner_radius; }

  // Wetted inner radius and its theta-derivative.
  double r_inner(double theta) const;
  double dr_inner(double theta) const;
};

AnnulusDomain build_rough_annulus(double inner_radius, double outer_radius,
                                  double eps, const RoughnessProfile& profile,
                                  int cells_per_period);

// Sampled invariant checks (throw on violation). Used by tests and at
// configuration time.
void validate_patch(const SurfacePatch& patch, int samples_per_dim = 5);
void validate_profile(const RoughnessProfile& profile, int dim, int samples = 64);

}  // namespace roughflow
