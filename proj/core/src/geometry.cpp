#include "roughflow/geometry.hpp"

#include <cmath>

namespace roughflow {

namespace {
constexpr double kPi = 3.14159265358979323846;

Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}
}  // namespace

Chart make_plane_chart(int ambient_dim) {
  Chart c;
  c.ambient_dim = ambient_dim;
  c.kind = "plane";
  const int sd = ambient_dim - 1;
  c.param_lo = Vec::Constant(sd, -10.0);
  c.param_hi = Vec::Constant(sd, 10.0);
  c.map = [ambient_dim](const Vec& x) {
    Vec p = Vec::Zero(ambient_dim);
    p.head(ambient_dim - 1) = x;
    return p;
  };
  c.jacobian = [ambient_dim](const Vec&) {
    Mat J = Mat::Zero(ambient_dim, ambient_dim - 1);
    J.topLeftCorner(ambient_dim - 1, ambient_dim - 1).setIdentity();
    return J;
  };
  c.normal = [ambient_dim](const Vec&) {
    Vec n = Vec::Zero(ambient_dim);
    n(ambient_dim - 1) = 1.0;
    return n;
  };
  return c;
}

Chart make_stretched_plane_chart(double sx, double sy) {
  Chart c;
  c.ambient_dim = 3;
  c.kind = "stretched-plane";
  c.param_lo = Vec::Constant(2, -10.0);
  c.param_hi = Vec::Constant(2, 10.0);
  c.map = [sx, sy](const Vec& x) {
    Vec p(3);
    p << sx * x(0), sy * x(1), 0.0;
    return p;
  };
  c.jacobian = [sx, sy](const Vec&) {
    Mat J = Mat::Zero(3, 2);
    J(0, 0) = sx;
    J(1, 1) = sy;
    return J;
  };
  c.normal = [](const Vec&) {
    Vec n(3);
    n << 0, 0, 1;
    return n;
  };
  return c;
}

Chart make_sphere_chart() {
  Chart c;
  c.ambient_dim = 3;
  c.kind = "sphere";
  c.param_lo = Vec(2);
  c.param_lo << 0.1, 0.0;
  c.param_hi = Vec(2);
  c.param_hi << kPi - 0.1, 2 * kPi;
  c.map = [](const Vec& x) {
    Vec p(3);
    p << std::sin(x(0)) * std::cos(x(1)), std::sin(x(0)) * std::sin(x(1)), std::cos(x(0));
    return p;
  };
  c.jacobian = [](const Vec& x) {
    Mat J(3, 2);
    const double s1 = std::sin(x(0)), c1 = std::cos(x(0));
    const double s2 = std::sin(x(1)), c2 = std::cos(x(1));
    J << c1 * c2, -s1 * s2,
         c1 * s2,  s1 * c2,
         -s1,      0.0;
    return J;
  };
  c.normal = [](const Vec& x) {
    Vec p(3);
    p << std::sin(x(0)) * std::cos(x(1)), std::sin(x(0)) * std::sin(x(1)), std::cos(x(0));
    return p;  // outward normal of the unit sphere is the position itself
  };
  return c;
}

Chart make_circle_chart(double radius) {
  Chart c;
  c.ambient_dim = 2;
  c.kind = "circle";
  c.param_lo = vec1(0.0);
  c.param_hi = vec1(2 * kPi);
  c.map = [radius](const Vec& x) {
    Vec p(2);
    p << radius * std::cos(x(0)), radius * std::sin(x(0));
    return p;
  };
  c.jacobian = [radius](const Vec& x) {
    Mat J(2, 1);
    J << -radius * std::sin(x(0)), radius * std::cos(x(0));
    return J;
  };
  c.normal = [](const Vec& x) {
    // into the enclosed solid: roughness grows toward the center
    Vec n(2);
    n << -std::cos(x(0)), -std::sin(x(0));
    return n;
  };
  return c;
}

Chart make_cylinder_chart(double radius) {
  Chart c;
  c.ambient_dim = 3;
  c.kind = "cylinder";
  c.param_lo = Vec(2);
  c.param_lo << 0.0, -10.0;
  c.param_hi = Vec(2);
  c.param_hi << 2 * kPi, 10.0;
  c.map = [radius](const Vec& x) {
    Vec p(3);
    p << radius * std::cos(x(0)), radius * std::sin(x(0)), x(1);
    return p;
  };
  c.jacobian = [radius](const Vec& x) {
    Mat J = Mat::Zero(3, 2);
    J(0, 0) = -radius * std::sin(x(0));
    J(1, 0) = radius * std::cos(x(0));
    J(2, 1) = 1.0;
    return J;
  };
  c.normal = [](const Vec& x) {
    // into the enclosed solid, matching the circle chart convention
    Vec n(3);
    n << -std::cos(x(0)), -std::sin(x(0)), 0.0;
    return n;
  };
  return c;
}

RoughnessProfile make_constant_profile(double height) {
  if (height < 0) throw GeometryError("constant profile height must be >= 0");
  RoughnessProfile p;
  p.kind = "constant";
  p.amplitude = height;
  p.bound_M = height;
  p.height = [height](const Vec&, const Vec&) { return height; };
  p.d_height_dfast1 = [](const Vec&, const Vec&) { return 0.0; };
  return p;
}

RoughnessProfile make_cosine_profile(double amplitude) {
  if (amplitude < 0) throw GeometryError("cosine profile amplitude must be >= 0");
  RoughnessProfile p;
  p.kind = "cosine";
  p.amplitude = amplitude;
  p.bound_M = amplitude;
  p.height = [amplitude](const Vec&, const Vec& y) {
    return 0.5 * amplitude * (1.0 + std::cos(2 * kPi * y(0)));
  };
  p.d_height_dfast1 = [amplitude](const Vec&, const Vec& y) {
    return -amplitude * kPi * std::sin(2 * kPi * y(0));
  };
  return p;
}

RoughnessProfile make_two_scale_profile(double amplitude) {
  if (amplitude < 0) throw GeometryError("two-scale profile amplitude must be >= 0");
  RoughnessProfile p;
  p.kind = "two-scale";
  p.amplitude = amplitude;
  p.bound_M = 1.5 * amplitude;
  auto slow_factor = [](const Vec& slow) {
    const double x1 = slow.size() > 0 ? slow(0) : 0.0;
    return 1.0 + 0.5 * std::sin(2 * kPi * x1);
  };
  p.height = [amplitude, slow_factor](const Vec& slow, const Vec& y) {
    return 0.5 * amplitude * slow_factor(slow) * (1.0 + std::cos(2 * kPi * y(0)));
  };
  p.d_height_dfast1 = [amplitude, slow_factor](const Vec& slow, const Vec& y) {
    return -amplitude * kPi * slow_factor(slow) * std::sin(2 * kPi * y(0));
  };
  return p;
}

CellCoefficients metric_matrices(const SurfacePatch& patch, const Vec& base_point) {
  const Chart& ch = patch.chart;
  const int d = ch.ambient_dim;
  if (base_point.size() != d - 1)
    throw DegenerateChartError("base point dimension mismatch");
  for (int j = 0; j < d - 1; ++j) {
    if (base_point(j) <= ch.param_lo(j) || base_point(j) >= ch.param_hi(j))
      throw DegenerateChartError("base point not interior to the parameter rectangle");
  }

  Mat F(d, d);  // frame matrix (Dphi, nu)
  F.leftCols(d - 1) = ch.jacobian(base_point);
  F.col(d - 1) = ch.normal(base_point);

  Eigen::FullPivLU<Mat> lu(F);
  if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-12)
    throw DegenerateChartError("frame matrix (Dphi, nu) is singular at base point");

  CellCoefficients cc;
  cc.dim = d;
  cc.base_point = base_point;
  cc.B = lu.inverse().transpose();
  Mat A = cc.B.transpose() * cc.B;
  A = 0.5 * (A + A.transpose().eval());

  // The normal is unit and orthogonal to the tangents, so A must have the
  // block form with last row/column e_d; verify and then snap it exactly.
  for (int j = 0; j < d - 1; ++j) {
    if (std::abs(A(d - 1, j)) > 1e-10)
      throw DegenerateChartError("metric block structure violated: normal not orthonormal to chart tangents");
  }
  if (std::abs(A(d - 1, d - 1) - 1.0) > 1e-10)
    throw DegenerateChartError("metric block structure violated: normal not unit length");
  A.row(d - 1).setZero();
  A.col(d - 1).setZero();
  A(d - 1, d - 1) = 1.0;
  cc.A = A;

  // Pose the cell problem in wall-aligned coordinates: replace B by its
  // symmetric polar factor sqrt(A) (the orthogonal factor is a rotation of
  // the ambient frame, under which the problem is invariant). This keeps
  // e_1..e_{d-1} along the chart tangents and e_d along the normal, so the
  // staggered discretization sees a near-diagonal B for any chart
  // orientation. A = B^T B is unchanged.
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  cc.B = es.operatorSqrt();
  return cc;
}

CellCoefficients make_cell_coefficients(const Mat& B, const Vec& base_point) {
  const int d = static_cast<int>(B.rows());
  if (B.cols() != d || (d != 2 && d != 3))
    throw InvalidCoefficientsError("B must be d x d with d in {2,3}");
  CellCoefficients cc;
  cc.dim = d;
  cc.B = B;
  cc.base_point = base_point.size() ? base_point : Vec::Zero(d - 1);
  Mat A = B.transpose() * B;
  A = 0.5 * (A + A.transpose().eval());
  for (int j = 0; j < d - 1; ++j)
    if (std::abs(A(d - 1, j)) > 1e-10)
      throw InvalidCoefficientsError("A = B^T B must have zero normal/tangential coupling");
  if (std::abs(A(d - 1, d - 1) - 1.0) > 1e-10)
    throw InvalidCoefficientsError("A = B^T B must have a_dd = 1");
  Eigen::LLT<Mat> llt(A);
  if (llt.info() != Eigen::Success)
    throw InvalidCoefficientsError("A = B^T B is not positive definite");
  A.row(d - 1).setZero();
  A.col(d - 1).setZero();
  A(d - 1, d - 1) = 1.0;
  cc.A = A;
  return cc;
}

Vec tube_point(const SurfacePatch& patch, const Vec& base_point, double t) {
  if (std::abs(t) >= patch.tube_halfwidth)
    throw OutOfTubeError("tube offset |t| exceeds tube halfwidth");
  return patch.chart.map(base_point) + t * patch.chart.normal(base_point);
}

double decay_rate_bound(const CellCoefficients& coeffs) {
  const Mat block = coeffs.tangential_block();
  Eigen::SelfAdjointEigenSolver<Mat> es(block);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin <= 0.0)
    throw InvalidCoefficientsError("tangential metric block is not positive definite");
  return kPi * std::sqrt(lmin);
}

double AnnulusDomain::r_inner(double theta) const {
  if (smooth()) return inner_radius;
  return inner_radius - eps * profile(vec1(theta), vec1(theta / eps));
}

double AnnulusDomain::dr_inner(double theta) const {
  if (smooth()) return 0.0;
  const Vec slow = vec1(theta);
  const Vec fast = vec1(theta / eps);
  // d/dtheta [ -eps * gamma(theta, theta/eps) ]
  //   = -eps * d(gamma)/d(slow) - d(gamma)/d(fast).
  double dfast;
  if (profile.d_height_dfast1) {
    dfast = profile.d_height_dfast1(slow, fast);
  } else {
    const double h = 1e-6;
    dfast = (profile(slow, vec1(theta / eps + h)) - profile(slow, vec1(theta / eps - h))) / (2 * h);
  }
  const double hs = 1e-6;
  const double dslow =
      (profile(vec1(theta + hs), fast) - profile(vec1(theta - hs), fast)) / (2 * hs);
  return -eps * dslow - dfast;
}

AnnulusDomain build_rough_annulus(double inner_radius, double outer_radius,
                                  double eps, const RoughnessProfile& profile,
                                  int cells_per_period) {
  if (!(inner_radius > 0) || !(outer_radius > inner_radius))
    throw GeometryError("annulus radii must satisfy 0 < inner < outer");

  AnnulusDomain dom;
  dom.inner_radius = inner_radius;
  dom.outer_radius = outer_radius;
  dom.profile = profile;
  dom.cells_per_period = cells_per_period;

  if (eps > 0.0) {
    if (!(eps * profile.bound_M < outer_radius - inner_radius))
      throw GeometryError("roughness amplitude eps*M does not fit inside the annular gap");
    if (cells_per_period < 8)
      throw ResolutionError("need at least 8 cells per roughness period");
    const int n = std::max(1, static_cast<int>(std::lround(2 * kPi / eps)));
    dom.n_periods = n;
    dom.eps = 2 * kPi / n;  // snapped so the roughness closes up

    // wetted boundary must stay a positive-radius graph
    for (int i = 0; i < 64 * std::min(n, 64); ++i) {
      const double th = 2 * kPi * i / (64.0 * std::min(n, 64));
      if (dom.r_inner(th) <= 0.0)
        throw GeometryError("rough inner boundary self-intersects (radius <= 0)");
    }
  } else {
    dom.eps = 0.0;
    dom.n_periods = 0;
  }
  return dom;
}

void validate_patch(const SurfacePatch& patch, int samples_per_dim) {
  const Chart& ch = patch.chart;
  const int sd = ch.surface_dim();
  const int d = ch.ambient_dim;
  std::vector<Vec> pts;
  if (sd == 1) {
    for (int i = 1; i <= samples_per_dim; ++i) {
      const double t = i / double(samples_per_dim + 1);
      pts.push_back(vec1(ch.param_lo(0) + t * (ch.param_hi(0) - ch.param_lo(0))));
    }
  } else {
    for (int i = 1; i <= samples_per_dim; ++i)
      for (int j = 1; j <= samples_per_dim; ++j) {
        Vec x(2);
        x << ch.param_lo(0) + i / double(samples_per_dim + 1) * (ch.param_hi(0) - ch.param_lo(0)),
             ch.param_lo(1) + j / double(samples_per_dim + 1) * (ch.param_hi(1) - ch.param_lo(1));
        pts.push_back(x);
      }
  }
  for (const Vec& x : pts) {
    const Mat J = ch.jacobian(x);
    Eigen::JacobiSVD<Mat> svd(J);
    if (svd.singularValues().minCoeff() < 1e-10)
      throw DegenerateChartError("chart jacobian loses rank at a sampled point");
    const Vec n = ch.normal(x);
    if (std::abs(n.norm() - 1.0) > 1e-12)
      throw DegenerateChartError("chart normal is not unit length");
    if ((J.transpose() * n).cwiseAbs().maxCoeff() > 1e-12)
      throw DegenerateChartError("chart normal is not orthogonal to the tangents");

    // Local injectivity of the tube map Upsilon(x',t) = phi(x') + t*nu(x'):
    // the frame (Dphi + t*Dnu, nu) must stay nonsingular for |t| < delta.
    const double fd = 1e-5;
    Mat Dn(d, sd);
    for (int j = 0; j < sd; ++j) {
      Vec xp = x, xm = x;
      xp(j) += fd;
      xm(j) -= fd;
      Dn.col(j) = (ch.normal(xp) - ch.normal(xm)) / (2 * fd);
    }
    for (double t : {-patch.tube_halfwidth * 0.99, 0.0, patch.tube_halfwidth * 0.99}) {
      Mat F(d, d);
      F.leftCols(sd) = J + t * Dn;
      F.col(sd) = n;
      if (std::abs(F.determinant()) < 1e-10)
        throw GeometryError("tube map degenerates inside |t| < delta (halfwidth too large)");
    }
  }
}

void validate_profile(const RoughnessProfile& profile, int dim, int samples) {
  const int sd = dim - 1;
  Vec slow = Vec::Zero(sd);
  for (int i = 0; i < samples; ++i) {
    Vec y = Vec::Zero(sd);
    y(0) = i / double(samples);
    if (sd > 1) y(1) = (i * 7 % samples) / double(samples);
    const double g = profile(slow, y);
    if (g < -1e-14) throw GeometryError("roughness profile is negative");
    if (g > profile.bound_M + 1e-12) throw GeometryError("roughness profile exceeds its bound M");
    Vec ys = y;
    ys(0) += 3.0;  // integer fast-period shift
    if (std::abs(profile(slow, ys) - g) > 1e-12)
      throw GeometryError("roughness profile is not 1-periodic in the fast variable");
  }
}

}  // namespace roughflow
