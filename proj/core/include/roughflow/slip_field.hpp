#pragma once

// Slip-coefficient field along the fictitious boundary: per-sample cell
// solves produce the (d-1)x(d-1) matrix c_lk = c^bl(lambda^(l)) . lambda^(k)
// in a per-patch orthonormal tangent frame; overlapping patches are blended
// with a polynomial partition of unity and the field is queryable between
// samples by periodic linear or cubic interpolation.

#include <vector>

#include "roughflow/cell_solver.hpp"
#include "roughflow/geometry.hpp"

namespace roughflow {

struct SlipSample {
  double param = 0.0;   // position along the global periodic boundary coordinate
  Vec surface_point;    // x' on the boundary (ambient coordinates)
  Vec chart_coord;      // owning chart parameters
  Mat tangent_frame;    // d x (d-1) orthonormal tangents
  Vec normal;           // unit normal (the frame's last leg)
  Mat matrix;           // (d-1) x (d-1) blended slip matrix
  CellCoefficients coeffs;
  int patch_id = 0;
};

// One patch plus the interval of the global boundary coordinate it covers.
// The coordinate maps affinely onto the chart's first parameter axis; the
// remaining chart parameters sit at the box midpoint.
struct PatchCoverage {
  SurfacePatch patch;
  double lo = 0.0, hi = 1.0;  // may wrap past the period
};

struct SlipFieldConfig {
  int sample_count = 16;
  int interpolation_order = 3;  // 1 or 3
  int cell_resolution = 32;
  double cell_depth = 0.0;      // <= 0: per-sample auto depth
};

struct SlipField {
  std::vector<SlipSample> samples;  // sorted by param in [0, period)
  double period = 1.0;
  int interpolation_order = 3;
  RoughnessProfile profile;
  SlipFieldConfig config;

  // periodic interpolation of the blended matrix; reproduces samples exactly
  Mat query(double t) const;
  const SlipSample& nearest_sample(double t) const;
};

SlipField assemble_slip_field(const std::vector<PatchCoverage>& coverage,
                              const RoughnessProfile& profile, double period,
                              const SlipFieldConfig& config);

// Frame invariance: re-solves every sample with tangent frames rotated by
// `angle` in the tangent plane and compares the physical slip action
// sum_lk c_lk (g . lambda^(k)) lambda^(l) for a fixed tangent test vector g.
// Returns the max relative discrepancy over samples.
double rotate_frame_check(const SlipField& field, double angle);

// Dense eigenvalue scan of the interpolated field at query_count points;
// returns min over queries of (-max eigenvalue) -- a positive margin
// certifies negative definiteness everywhere sampled.
double negdef_scan(const SlipField& field, int query_count);

}  // namespace roughflow
