#include <doctest.h>

#include <cmath>

#include "roughflow/slip_field.hpp"

using namespace roughflow;

namespace {
constexpr double kPi = 3.14159265358979323846;

SlipFieldConfig quick_config(int samples) {
  SlipFieldConfig cfg;
  cfg.sample_count = samples;
  cfg.cell_resolution = 24;
  // flat-profile fields used below have exact shallow truncations
  cfg.cell_depth = 1.0;
  return cfg;
}

std::vector<PatchCoverage> full_circle() {
  PatchCoverage cov;
  cov.patch = SurfacePatch{make_circle_chart(1.0), 0.5, 0};
  cov.lo = 0.0;
  cov.hi = 2 * kPi;
  return {cov};
}
}  // namespace

TEST_CASE("flat profile on the unit circle gives the closed-form field") {
  // unit radius: the chart metric is the identity, so every sample solves the
  // flat-wall cell problem with c = -1/2
  const SlipField field = assemble_slip_field(full_circle(), make_constant_profile(0.5),
                                              2 * kPi, quick_config(4));
  REQUIRE(field.samples.size() == 4);
  for (const SlipSample& s : field.samples) {
    CHECK(s.matrix.rows() == 1);
    CHECK(s.matrix(0, 0) == doctest::Approx(-0.5).epsilon(1e-8));
    CHECK(s.normal.norm() == doctest::Approx(1.0));
  }
  // interpolation reproduces samples and stays at the constant in between
  for (const SlipSample& s : field.samples)
    CHECK(field.query(s.param)(0, 0) == doctest::Approx(s.matrix(0, 0)));
  CHECK(field.query(0.77)(0, 0) == doctest::Approx(-0.5).epsilon(1e-8));
  CHECK(negdef_scan(field, 64) > 0.4);

  // nearest-sample lookup wraps periodically
  CHECK(field.nearest_sample(2 * kPi - 1e-6).param == doctest::Approx(0.0));
}

TEST_CASE("coverage gaps are rejected") {
  PatchCoverage cov;
  cov.patch = SurfacePatch{make_circle_chart(1.0), 0.5, 0};
  cov.lo = 0.0;
  cov.hi = kPi;  // covers only half the boundary
  CHECK_THROWS_AS(assemble_slip_field({cov}, make_constant_profile(0.5), 2 * kPi,
                                      quick_config(4)),
                  DecompositionError);
}

TEST_CASE("two overlapping patches blend into one smooth field") {
  PatchCoverage a, b;
  a.patch = SurfacePatch{make_circle_chart(1.0), 0.5, 0};
  a.lo = -0.5;
  a.hi = kPi + 0.5;
  b.patch = SurfacePatch{make_circle_chart(1.0), 0.5, 1};
  b.lo = kPi - 0.5;
  b.hi = 2 * kPi + 0.5;
  const SlipField field = assemble_slip_field({a, b}, make_constant_profile(0.5),
                                              2 * kPi, quick_config(6));
  // both patches describe the same geometry, so the blend is still the flat value
  for (const SlipSample& s : field.samples)
    CHECK(s.matrix(0, 0) == doctest::Approx(-0.5).epsilon(1e-8));
  CHECK(negdef_scan(field, 48) > 0.4);
}

TEST_CASE("frame rotation in a 1D tangent space flips the sign of the leg") {
  SurfacePatch patch{make_circle_chart(1.0), 0.5, 0};
  const CellCoefficients k = metric_matrices(patch, Vec::Constant(1, 0.3));
  const Mat frame = default_tangent_frame(k);
  const Mat flipped = rotate_tangent_frame(k, frame, kPi);
  CHECK((flipped + frame).norm() < 1e-14);
  CHECK((rotate_tangent_frame(k, frame, 0.0) - frame).norm() < 1e-14);
}
