#include <doctest.h>

#include <cmath>

#include "roughflow/geometry.hpp"

using namespace roughflow;

namespace {
constexpr double kPi = 3.14159265358979323846;

Vec v1(double a) {
  Vec x(1);
  x << a;
  return x;
}
Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}
}  // namespace

TEST_CASE("plane chart is the identity graph") {
  const Chart c = make_plane_chart(3);
  CHECK(c.ambient_dim == 3);
  CHECK(c.surface_dim() == 2);
  const Vec x = v2(0.3, -0.2);
  const Vec p = c.map(x);
  CHECK(p(0) == doctest::Approx(0.3));
  CHECK(p(1) == doctest::Approx(-0.2));
  CHECK(p(2) == doctest::Approx(0.0));
  const Vec nu = c.normal(x);
  CHECK(nu.norm() == doctest::Approx(1.0));
  // normal orthogonal to both tangent columns
  const Mat J = c.jacobian(x);
  CHECK(std::abs((J.transpose() * nu)(0)) < 1e-14);
  CHECK(std::abs((J.transpose() * nu)(1)) < 1e-14);
  validate_patch(SurfacePatch{c, 0.5, 0});
}

TEST_CASE("jacobians match finite differences of the map") {
  for (const Chart& c : {make_circle_chart(1.5), make_sphere_chart(),
                         make_cylinder_chart(2.0), make_stretched_plane_chart(1.3, 0.7)}) {
    const int sd = c.surface_dim();
    Vec x = 0.5 * (c.param_lo + c.param_hi);
    const Mat J = c.jacobian(x);
    const double dh = 1e-6;
    for (int j = 0; j < sd; ++j) {
      Vec xp = x, xm = x;
      xp(j) += dh;
      xm(j) -= dh;
      const Vec col = (c.map(xp) - c.map(xm)) / (2 * dh);
      CHECK((col - J.col(j)).norm() < 1e-8);
    }
    const Vec nu = c.normal(x);
    CHECK(nu.norm() == doctest::Approx(1.0));
    CHECK((J.transpose() * nu).norm() < 1e-12);
  }
}

TEST_CASE("circle chart lies on the circle and validates") {
  const Chart c = make_circle_chart(2.0);
  for (double t : {0.0, 0.2, 0.7}) {
    const Vec x = c.param_lo + t * (c.param_hi - c.param_lo);
    CHECK(c.map(x).norm() == doctest::Approx(2.0));
  }
  validate_patch(SurfacePatch{c, 0.5, 0});
}

TEST_CASE("metric matrices have the block structure A = diag(A', 1)") {
  SurfacePatch patch;
  patch.chart = make_cylinder_chart(1.7);
  const CellCoefficients k = metric_matrices(patch, v2(0.4, 0.1));
  const int d = k.dim;
  CHECK(d == 3);
  // SPD, B symmetric with B^2 = A
  CHECK((k.A - k.A.transpose()).norm() < 1e-12);
  CHECK((k.B - k.B.transpose()).norm() < 1e-12);
  CHECK((k.B * k.B - k.A).norm() < 1e-10);
  // normal block decoupled and unit
  CHECK(k.A(d - 1, d - 1) == doctest::Approx(1.0));
  CHECK(std::abs(k.A(0, d - 1)) < 1e-12);
  CHECK(std::abs(k.A(1, d - 1)) < 1e-12);
  // tangential block = (Dphi^T Dphi)^{-1}
  const Mat J = patch.chart.jacobian(v2(0.4, 0.1));
  const Mat Gram = J.transpose() * J;
  CHECK((k.tangential_block() * Gram - Mat::Identity(2, 2)).norm() < 1e-10);
}

TEST_CASE("direct coefficients validate the block structure") {
  Mat A = Mat::Identity(3, 3);
  A(0, 0) = 2.0;
  A(0, 1) = A(1, 0) = 0.3;
  Mat B = Eigen::SelfAdjointEigenSolver<Mat>(A).operatorSqrt();
  const CellCoefficients k = make_cell_coefficients(B);
  CHECK((k.A - A).norm() < 1e-12);

  // coupling the normal direction to a tangent must be rejected
  Mat Abad = A;
  Abad(0, 2) = Abad(2, 0) = 0.4;
  Mat Bbad = Eigen::SelfAdjointEigenSolver<Mat>(Abad).operatorSqrt();
  CHECK_THROWS_AS(make_cell_coefficients(Bbad), InvalidCoefficientsError);
}

TEST_CASE("decay rate bound is pi * sqrt(lambda_min of the tangential block)") {
  SurfacePatch plane{make_plane_chart(3), 0.5, 0};
  CHECK(decay_rate_bound(metric_matrices(plane, v2(0, 0))) == doctest::Approx(kPi));
  // stretching x1 by 2 scales the metric eigenvalue to 1/4
  SurfacePatch s{make_stretched_plane_chart(2.0, 1.0), 0.5, 0};
  CHECK(decay_rate_bound(metric_matrices(s, v2(0, 0))) == doctest::Approx(kPi / 2));
}

TEST_CASE("roughness profiles: periodicity, bounds, analytic slope") {
  for (const RoughnessProfile& p :
       {make_cosine_profile(0.25), make_two_scale_profile(0.3)}) {
    validate_profile(p, 2);
    const Vec slow = v1(0.37);
    for (double y : {0.0, 0.21, 0.64}) {
      const double g = p(slow, v1(y));
      CHECK(g >= 0.0);
      CHECK(g <= p.bound_M + 1e-14);
      CHECK(p(slow, v1(y + 1.0)) == doctest::Approx(g));
      if (p.d_height_dfast1) {
        const double dh = 1e-6;
        const double fd = (p(slow, v1(y + dh)) - p(slow, v1(y - dh))) / (2 * dh);
        CHECK(p.d_height_dfast1(slow, v1(y)) == doctest::Approx(fd).epsilon(1e-5));
      }
    }
  }
  const RoughnessProfile flat = make_constant_profile(0.5);
  CHECK(flat(v1(0.1), v1(0.9)) == doctest::Approx(0.5));
  CHECK(flat.bound_M == doctest::Approx(0.5));
}

TEST_CASE("rough annulus snaps eps so the roughness closes up") {
  const AnnulusDomain dom =
      build_rough_annulus(1.0, 2.0, 1.0 / 16, make_cosine_profile(0.25), 16);
  CHECK(dom.n_periods > 0);
  CHECK(dom.eps == doctest::Approx(2 * kPi / dom.n_periods));
  CHECK(std::abs(dom.eps - 1.0 / 16) < 0.5 / 16);
  // wetted wall: r(theta) = inner - eps * gamma(theta, theta/eps)
  const double th = 0.3;
  const double g = dom.profile(v1(th), v1(th / dom.eps));
  CHECK(dom.r_inner(th) == doctest::Approx(1.0 - dom.eps * g));
  // derivative consistent with finite differences
  const double dh = 1e-6;
  const double fd = (dom.r_inner(th + dh) - dom.r_inner(th - dh)) / (2 * dh);
  CHECK(dom.dr_inner(th) == doctest::Approx(fd).epsilon(1e-4));
  // periodic closure
  CHECK(dom.r_inner(th + dom.eps) == doctest::Approx(dom.r_inner(th)));

  const AnnulusDomain smooth =
      build_rough_annulus(1.0, 2.0, 0.0, make_cosine_profile(0.25), 16);
  CHECK(smooth.smooth());
  CHECK(smooth.r_inner(0.7) == doctest::Approx(1.0));
}

TEST_CASE("tube points move along the normal") {
  SurfacePatch patch{make_circle_chart(1.0), 0.5, 0};
  const Vec x = v1(0.25);
  const Vec base = patch.chart.map(x);
  const Vec nu = patch.chart.normal(x);
  const Vec q = tube_point(patch, x, 0.2);
  CHECK((q - (base + 0.2 * nu)).norm() < 1e-12);
  CHECK_THROWS_AS(tube_point(patch, x, 0.9), OutOfTubeError);
}
