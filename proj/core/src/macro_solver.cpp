#include "roughflow/macro_solver.hpp"

#include <algorithm>
#include <cmath>

namespace roughflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_angle(double t, double period) {
  t = std::fmod(t, period);
  if (t < 0) t += period;
  return t;
}

// grading strength giving rho'(0) = target (target in (0, 1])
double solve_kappa(double target) {
  if (target >= 1.0) return 0.0;
  double lo = 1e-8, hi = 30.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double val = mid / std::expm1(mid);
    (val > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double MacroGrid::rho(double s) const {
  if (kappa == 0.0) return s;
  return std::expm1(kappa * s) / std::expm1(kappa);
}
double MacroGrid::drho(double s) const {
  if (kappa == 0.0) return 1.0;
  return kappa * std::exp(kappa * s) / std::expm1(kappa);
}
double MacroGrid::rin(double a) const {
  return rough_wall ? dom.r_inner(a) : dom.inner_radius;
}
double MacroGrid::drin(double a) const {
  return rough_wall ? dom.dr_inner(a) : 0.0;
}
double MacroGrid::s_of_r(double a, double r) const {
  // invert the smooth part in closed form, then Newton for the wall fade
  auto s_smooth = [&](double rr) {
    double t = std::clamp((rr - inner) / (outer - inner), 0.0, 1.0);
    return kappa == 0.0 ? t : std::log1p(t * std::expm1(kappa)) / kappa;
  };
  if (!rough_wall || rin(a) == inner) return s_smooth(r);
  double lo = 0.0, hi = 1.0;
  double s = s_smooth(r);
  for (int it = 0; it < 60; ++it) {
    const double f = m(a, s) - r;
    if (std::abs(f) < 1e-13 * outer) break;
    (f > 0 ? hi : lo) = s;
    const double step = f / ms(a, s);
    s -= step;
    if (!(s > lo && s < hi)) s = 0.5 * (lo + hi);
  }
  return std::clamp(s, 0.0, 1.0);
}

namespace {

MacroGrid make_grid(const MacroProblemSpec& spec) {
  MacroGrid g;
  g.dom = spec.domain;
  g.inner = spec.domain.inner_radius;
  g.outer = spec.domain.outer_radius;
  g.eps = spec.domain.eps;
  g.rough_wall = (spec.variant == MacroVariant::Rough) && !spec.domain.smooth();

  const int npd = spec.domain.n_periods;
  if (spec.sector && npd > 0) {
    g.P = 2.0 * kPi / npd;
    g.n_sectors = npd;
    g.na = spec.angular_cells > 0 ? spec.angular_cells : spec.domain.cells_per_period;
  } else {
    g.P = 2.0 * kPi;
    g.n_sectors = 1;
    g.na = spec.angular_cells > 0
               ? spec.angular_cells
               : std::max(16, spec.domain.cells_per_period * std::max(npd, 1));
  }
  g.ns = spec.radial_cells;
  if (g.na < 4 || g.ns < 8) throw ResolutionError("macro grid too coarse");
  g.da = g.P / g.na;
  g.ds = 1.0 / g.ns;

  double target = spec.wall_spacing;
  if (target <= 0) target = (g.eps > 0) ? g.eps / 12.0 : 0.0;
  const double gap = g.outer - g.inner;
  if (target > 0) g.kappa = solve_kappa(g.ns * target / gap);

  // fade the wall perturbation out within a fixed multiple of the roughness
  // scale (capped well inside the gap)
  const double fade_r = (g.eps > 0) ? std::min(0.4 * gap, 30.0 * g.eps) : gap;
  const double tf = std::clamp(fade_r / gap, 1e-6, 1.0);
  g.s_cut = g.kappa == 0.0 ? tf : std::log1p(tf * std::expm1(g.kappa)) / g.kappa;
  return g;
}

// per-column ghost relation v(i, out-of-range) = sigma * v(i, edge) + shift
struct GhostRow {
  std::vector<double> sigma, shift;
};

struct Assembler {
  const MacroProblemSpec& spec;
  const SlipField* slip;
  MacroGrid g;
  int OU, OV, OP, OM, N;
  SparseBuilder M;
  Vec rhs;
  GhostRow lo, hi;

  Assembler(const MacroProblemSpec& s, const SlipField* sf)
      : spec(s), slip(sf), g(make_grid(s)), OU(0), OV(g.na * (g.ns + 1)),
        OP(OV + g.na * g.ns), OM(OP + g.na * g.ns), N(OM + 1), M(N, N),
        rhs(Vec::Zero(N)) {}

  int wi(int i) const { return ((i % g.na) + g.na) % g.na; }
  int ru(int i, int k) const { return OU + g.id_u(wi(i), k); }
  int rv(int i, int k) const { return OV + g.id_v(wi(i), k); }
  int rp(int i, int k) const { return OP + g.id_p(wi(i), k); }

  double alpha(double a, double s) const { return g.ms(a, s) / g.m(a, s); }
  double beta(double a, double s) const { return -g.ma(a, s) / g.m(a, s); }
  double gamma(double a, double s) const {
    const double ma = g.ma(a, s), m = g.m(a, s), ms = g.ms(a, s);
    return (ma * ma + m * m) / (m * ms);
  }
  double jac(double a, double s) const { return g.m(a, s) * g.ms(a, s); }

  void build_ghosts() {
    lo.sigma.assign(g.na, -1.0);
    lo.shift.assign(g.na, 0.0);
    hi.sigma.assign(g.na, -1.0);
    hi.shift.assign(g.na, 0.0);
    for (int i = 0; i < g.na; ++i) {
      const double a = g.a_v(i);
      // outer wall: Dirichlet data
      const double gout = spec.outer_u_theta ? spec.outer_u_theta(a) : 1.0;
      hi.shift[i] = 2.0 * gout;
      switch (spec.variant) {
        case MacroVariant::Rough:
        case MacroVariant::Dirichlet:
          break;  // homogeneous wall
        case MacroVariant::Corrector: {
          const double gin = spec.inner_u_theta ? spec.inner_u_theta(a) : 0.0;
          lo.shift[i] = 2.0 * gin;
          break;
        }
        case MacroVariant::Navier: {
          double c;
          if (spec.use_constant_slip)
            c = spec.constant_slip;
          else if (slip)
            c = slip->query(a)(0, 0);
          else
            throw ConfigError("navier variant needs a slip field or constant");
          if (!(c < 0))
            throw IllPosedBcError("navier slip coefficient must be negative");
          const double dr_wall = g.ms(a, 0.0) * g.ds;
          const double q = g.eps * (-c) / dr_wall;
          lo.sigma[i] = (q - 0.5) / (q + 0.5);
          lo.shift[i] = 0.0;
          break;
        }
      }
    }
  }

  // add coefficient on a v unknown, eliminating boundary ghosts
  void add_v(int row, int i, int k, double coef) {
    if (coef == 0.0) return;
    i = wi(i);
    if (k < 0) {
      M.add(row, rv(i, 0), coef * lo.sigma[i]);
      rhs(row) -= coef * lo.shift[i];
    } else if (k >= g.ns) {
      M.add(row, rv(i, g.ns - 1), coef * hi.sigma[i]);
      rhs(row) -= coef * hi.shift[i];
    } else {
      M.add(row, rv(i, k), coef);
    }
  }
  void add_u(int row, int i, int k, double coef) {
    if (coef != 0.0) M.add(row, ru(i, k), coef);
  }
  void add_p(int row, int i, int k, double coef) {
    if (coef != 0.0) M.add(row, rp(i, k), coef);
  }

  void momentum_u() {
    const double da = g.da, ds = g.ds;
    for (int k = 0; k <= g.ns; ++k) {
      for (int i = 0; i < g.na; ++i) {
        const int row = ru(i, k);
        const double a0 = g.a_u(i), s0 = g.s_u(k);
        if (k == 0) {  // wall: u_r Dirichlet (impermeability / no-slip)
          M.add(row, row, 1.0);
          rhs(row) = spec.inner_u_r ? spec.inner_u_r(a0) : 0.0;
          continue;
        }
        if (k == g.ns) {  // outer Dirichlet
          M.add(row, row, 1.0);
          rhs(row) = spec.outer_u_r ? spec.outer_u_r(a0) : 0.0;
          continue;
        }
        const double J0 = jac(a0, s0);
        const double m0 = g.m(a0, s0);
        const double ms0 = g.ms(a0, s0);
        const double ras = g.ma(a0, s0) / ms0;

        // -Lap u, conservative fluxes; signs folded in (-1/J0 per flux diff)
        for (int sgn : {-1, 1}) {  // a-direction fluxes
          const double af = a0 + 0.5 * sgn * da;
          const double cA = alpha(af, s0), cB = beta(af, s0);
          const double w = -sgn / (da * J0);
          const int iE = (sgn > 0) ? i + 1 : i;
          const int iW = (sgn > 0) ? i : i - 1;
          add_u(row, iE, k, w * cA / da);
          add_u(row, iW, k, -w * cA / da);
          add_u(row, iE, k + 1, w * cB / (4 * ds));
          add_u(row, iW, k + 1, w * cB / (4 * ds));
          add_u(row, iE, k - 1, -w * cB / (4 * ds));
          add_u(row, iW, k - 1, -w * cB / (4 * ds));
        }
        for (int sgn : {-1, 1}) {  // s-direction fluxes
          const double sf = s0 + 0.5 * sgn * ds;
          const double cB = beta(a0, sf), cG = gamma(a0, sf);
          const double w = -sgn / (ds * J0);
          const int kN = (sgn > 0) ? k + 1 : k;
          const int kS = (sgn > 0) ? k : k - 1;
          add_u(row, i, kN, w * cG / ds);
          add_u(row, i, kS, -w * cG / ds);
          add_u(row, i + 1, kN, w * cB / (4 * da));
          add_u(row, i + 1, kS, w * cB / (4 * da));
          add_u(row, i - 1, kN, -w * cB / (4 * da));
          add_u(row, i - 1, kS, -w * cB / (4 * da));
        }

        // + u / m^2
        add_u(row, i, k, 1.0 / (m0 * m0));

        // + (2/m^2) D_theta v, D_theta = d_a - (ma/ms) d_s
        const double cv = 2.0 / (m0 * m0);
        // v_a: columns i, i+1; rows k-1, k
        add_v(row, i + 1, k - 1, cv / (2 * da));
        add_v(row, i + 1, k, cv / (2 * da));
        add_v(row, i, k - 1, -cv / (2 * da));
        add_v(row, i, k, -cv / (2 * da));
        // -(ma/ms) v_s
        add_v(row, i, k, -cv * ras / (2 * ds));
        add_v(row, i + 1, k, -cv * ras / (2 * ds));
        add_v(row, i, k - 1, cv * ras / (2 * ds));
        add_v(row, i + 1, k - 1, cv * ras / (2 * ds));

        // + (1/ms) d_s p
        add_p(row, i, k, 1.0 / (ms0 * ds));
        add_p(row, i, k - 1, -1.0 / (ms0 * ds));

        if (spec.body_force) rhs(row) += spec.body_force(a0, m0)(0);
      }
    }
  }

  void momentum_v() {
    const double da = g.da, ds = g.ds;
    for (int k = 0; k < g.ns; ++k) {
      for (int i = 0; i < g.na; ++i) {
        const int row = rv(i, k);
        const double a0 = g.a_v(i), s0 = g.s_v(k);
        const double J0 = jac(a0, s0);
        const double m0 = g.m(a0, s0);
        const double ms0 = g.ms(a0, s0);
        const double ras = g.ma(a0, s0) / ms0;

        for (int sgn : {-1, 1}) {  // a-direction fluxes
          const double af = a0 + 0.5 * sgn * da;
          const double cA = alpha(af, s0), cB = beta(af, s0);
          const double w = -sgn / (da * J0);
          const int iE = (sgn > 0) ? i + 1 : i;
          const int iW = (sgn > 0) ? i : i - 1;
          add_v(row, iE, k, w * cA / da);
          add_v(row, iW, k, -w * cA / da);
          add_v(row, iE, k + 1, w * cB / (4 * ds));
          add_v(row, iW, k + 1, w * cB / (4 * ds));
          add_v(row, iE, k - 1, -w * cB / (4 * ds));
          add_v(row, iW, k - 1, -w * cB / (4 * ds));
        }
        for (int sgn : {-1, 1}) {  // s-direction fluxes
          const double sf = s0 + 0.5 * sgn * ds;
          const double cB = beta(a0, sf), cG = gamma(a0, sf);
          const double w = -sgn / (ds * J0);
          const int kN = (sgn > 0) ? k + 1 : k;
          const int kS = (sgn > 0) ? k : k - 1;
          add_v(row, i, kN, w * cG / ds);
          add_v(row, i, kS, -w * cG / ds);
          add_v(row, i + 1, kN, w * cB / (4 * da));
          add_v(row, i + 1, kS, w * cB / (4 * da));
          add_v(row, i - 1, kN, -w * cB / (4 * da));
          add_v(row, i - 1, kS, -w * cB / (4 * da));
        }

        // + v / m^2
        add_v(row, i, k, 1.0 / (m0 * m0));

        // - (2/m^2) D_theta u
        const double cu = -2.0 / (m0 * m0);
        add_u(row, i, k, cu / (2 * da));
        add_u(row, i, k + 1, cu / (2 * da));
        add_u(row, i - 1, k, -cu / (2 * da));
        add_u(row, i - 1, k + 1, -cu / (2 * da));
        add_u(row, i, k + 1, -cu * ras / (2 * ds));
        add_u(row, i - 1, k + 1, -cu * ras / (2 * ds));
        add_u(row, i, k, cu * ras / (2 * ds));
        add_u(row, i - 1, k, cu * ras / (2 * ds));

        // + (1/m)(d_a p - (ma/ms) d_s p)
        add_p(row, i, k, 1.0 / (m0 * da));
        add_p(row, i - 1, k, -1.0 / (m0 * da));
        const double cp = -ras / m0;
        if (k == 0) {
          add_p(row, i, 1, cp / (2 * ds));
          add_p(row, i - 1, 1, cp / (2 * ds));
          add_p(row, i, 0, -cp / (2 * ds));
          add_p(row, i - 1, 0, -cp / (2 * ds));
        } else if (k == g.ns - 1) {
          add_p(row, i, k, cp / (2 * ds));
          add_p(row, i - 1, k, cp / (2 * ds));
          add_p(row, i, k - 1, -cp / (2 * ds));
          add_p(row, i - 1, k - 1, -cp / (2 * ds));
        } else {
          add_p(row, i, k + 1, cp / (4 * ds));
          add_p(row, i - 1, k + 1, cp / (4 * ds));
          add_p(row, i, k - 1, -cp / (4 * ds));
          add_p(row, i - 1, k - 1, -cp / (4 * ds));
        }

        if (spec.body_force) rhs(row) += spec.body_force(a0, m0)(1);
      }
    }
  }

  void continuity() {
    const double da = g.da, ds = g.ds;
    for (int k = 0; k < g.ns; ++k) {
      for (int i = 0; i < g.na; ++i) {
        const int row = rp(i, k);
        // angular fluxes F^a = ms * v at v nodes i and i+1
        for (int sgn : {-1, 1}) {
          const int iv = (sgn > 0) ? i + 1 : i;
          const double msv = g.ms(g.a_v(wi(iv)), g.s_v(k));
          add_v(row, iv, k, sgn * msv * ds);
        }
        // radial fluxes F^s = m u - ma * avg(v) at u nodes k and k+1
        for (int sgn : {-1, 1}) {
          const int ku = (sgn > 0) ? k + 1 : k;
          const double au = g.a_u(i), su = g.s_u(ku);
          add_u(row, i, ku, sgn * g.m(au, su) * da);
          const double mau = g.ma(au, su);
          if (mau != 0.0) {
            const double c = -sgn * mau * da / 4.0;
            add_v(row, i, ku - 1, c);
            add_v(row, i, ku, c);
            add_v(row, i + 1, ku - 1, c);
            add_v(row, i + 1, ku, c);
          }
        }
        // pressure-mean multiplier (symmetric bordering)
        const double wcell = jac(g.a_p(i), g.s_p(k)) * da * ds;
        M.add(row, OM, wcell);
        M.add(OM, rp(i, k), wcell);
      }
    }
  }

  MacroSolution solve() {
    build_ghosts();
    momentum_u();
    momentum_v();
    continuity();

    SolveStats stats;
    const SpMat Msp = M.build();
    M.trips.clear();
    M.trips.shrink_to_fit();
    // LU fill on wide annulus grids exceeds memory around ~75k unknowns
    const Vec x = (N <= 60000)
                      ? solve_direct(Msp, rhs, &stats, spec.tolerance)
                      : solve_ilu_bicgstab(Msp, rhs, &stats, spec.tolerance);

    MacroSolution sol;
    sol.variant = spec.variant;
    sol.spec = spec;
    sol.grid = g;
    sol.stats = stats;
    sol.u.assign(x.data() + OU, x.data() + OU + g.na * (g.ns + 1));
    sol.v.assign(x.data() + OV, x.data() + OV + g.na * g.ns);
    sol.p.assign(x.data() + OP, x.data() + OP + g.na * g.ns);

    sol.v_ghost_lo.resize(g.na);
    sol.v_ghost_hi.resize(g.na);
    for (int i = 0; i < g.na; ++i) {
      sol.v_ghost_lo[i] = lo.sigma[i] * sol.v[g.id_v(i, 0)] + lo.shift[i];
      sol.v_ghost_hi[i] = hi.sigma[i] * sol.v[g.id_v(i, g.ns - 1)] + hi.shift[i];
    }

    // weighted mean is pinned by the multiplier; report the raw divergence
    double maxdiv = 0.0;
    for (int k = 0; k < g.ns; ++k) {
      for (int i = 0; i < g.na; ++i) {
        double flux = 0.0;
        for (int sgn : {-1, 1}) {
          const int iv = wi((sgn > 0) ? i + 1 : i);
          flux += sgn * g.ms(g.a_v(iv), g.s_v(k)) * sol.v[g.id_v(iv, k)] * g.ds;
        }
        for (int sgn : {-1, 1}) {
          const int ku = (sgn > 0) ? k + 1 : k;
          const double au = g.a_u(i), su = g.s_u(ku);
          flux += sgn * g.m(au, su) * sol.u[g.id_u(i, ku)] * g.da;
          const double mau = g.ma(au, su);
          if (mau != 0.0) {
            auto vat = [&](int ii, int kk) {
              ii = wi(ii);
              if (kk < 0) return sol.v_ghost_lo[ii];
              if (kk >= g.ns) return sol.v_ghost_hi[ii];
              return sol.v[g.id_v(ii, kk)];
            };
            flux -= sgn * mau * g.da / 4.0 *
                    (vat(i, ku - 1) + vat(i, ku) + vat(i + 1, ku - 1) + vat(i + 1, ku));
          }
        }
        const double cell = jac(g.a_p(i), g.s_p(k)) * g.da * g.ds;
        maxdiv = std::max(maxdiv, std::abs(flux) / cell);
      }
    }
    sol.divergence_residual = maxdiv;
    return sol;
  }
};

}  // namespace

MacroSolution solve_macro(const MacroProblemSpec& spec, const SlipField* slip) {
  if (spec.variant == MacroVariant::Navier && !spec.use_constant_slip && !slip)
    throw ConfigError("navier variant needs a slip field");
  Assembler asmbl(spec, slip);
  return asmbl.solve();
}

// ---------------------------------------------------------------------------
// sampling

Eigen::Vector2d MacroSolution::velocity_polar(double theta, double r) const {
  const MacroGrid& g = grid;
  const double a = wrap_angle(theta, g.P);
  const double s = g.s_of_r(a, r);
  const int na = g.na, ns = g.ns;

  // u_r on (i+1/2, k)
  double ur;
  {
    double x = a / g.da - 0.5;
    double y = std::clamp(s / g.ds, 0.0, double(ns));
    const int i0 = static_cast<int>(std::floor(x));
    const int k0 = std::min(static_cast<int>(std::floor(y)), ns - 1);
    const double fx = x - i0, fy = y - k0;
    auto at = [&](int i, int k) { return u[g.id_u(((i % na) + na) % na, k)]; };
    ur = (1 - fx) * (1 - fy) * at(i0, k0) + fx * (1 - fy) * at(i0 + 1, k0) +
         (1 - fx) * fy * at(i0, k0 + 1) + fx * fy * at(i0 + 1, k0 + 1);
  }
  // u_theta on (i, k+1/2), ghost rows extend to the walls
  double ut;
  {
    double x = a / g.da;
    double y = std::clamp(s / g.ds - 0.5, -1.0, double(ns));
    const int i0 = static_cast<int>(std::floor(x));
    const int k0 = std::clamp(static_cast<int>(std::floor(y)), -1, ns - 1);
    const double fx = x - i0, fy = y - k0;
    auto at = [&](int i, int k) {
      i = ((i % na) + na) % na;
      if (k < 0) return v_ghost_lo[i];
      if (k >= ns) return v_ghost_hi[i];
      return v[g.id_v(i, k)];
    };
    ut = (1 - fx) * (1 - fy) * at(i0, k0) + fx * (1 - fy) * at(i0 + 1, k0) +
         (1 - fx) * fy * at(i0, k0 + 1) + fx * fy * at(i0 + 1, k0 + 1);
  }
  return Eigen::Vector2d(ur, ut);
}

double MacroSolution::pressure_at(double theta, double r) const {
  const MacroGrid& g = grid;
  const double a = wrap_angle(theta, g.P);
  const double s = g.s_of_r(a, r);
  const int na = g.na, ns = g.ns;
  double x = a / g.da - 0.5;
  double y = std::clamp(s / g.ds - 0.5, 0.0, double(ns - 1));
  const int i0 = static_cast<int>(std::floor(x));
  const int k0 = std::min(static_cast<int>(std::floor(y)), ns - 2);
  const double fx = x - i0, fy = y - k0;
  auto at = [&](int i, int k) { return p[g.id_p(((i % na) + na) % na, k)]; };
  return (1 - fx) * (1 - fy) * at(i0, k0) + fx * (1 - fy) * at(i0 + 1, k0) +
         (1 - fx) * fy * at(i0, k0 + 1) + fx * fy * at(i0 + 1, k0 + 1);
}

// ---------------------------------------------------------------------------
// wall traces and correctors

namespace {

double periodic_lerp(const std::vector<double>& vals, double period, double offset,
                     double t) {
  const int n = static_cast<int>(vals.size());
  const double spacing = period / n;
  double x = wrap_angle(t - offset * spacing, period) / spacing;
  const int i0 = static_cast<int>(std::floor(x)) % n;
  const double f = x - std::floor(x);
  return (1 - f) * vals[i0] + f * vals[(i0 + 1) % n];
}

}  // namespace

double WallTraces::chi1_at(double theta) const {
  return periodic_lerp(chi1, period, 0.0, theta);
}
double WallTraces::chi2_at(double theta) const {
  return periodic_lerp(chi2, period, 0.5, theta);
}

WallTraces extract_wall_traces(const MacroSolution& sol) {
  const MacroGrid& g = sol.grid;
  if (g.rough_wall)
    throw IncompatibleFieldsError("wall traces require a smooth-wall solution");
  WallTraces tr;
  tr.period = g.P;
  tr.chi1.resize(g.na);
  tr.chi2.resize(g.na);
  for (int i = 0; i < g.na; ++i) {
    // chi1 = -d u_theta/d r at the wall, quadratic through (wall, 0) and the
    // first two u_theta rows
    const double a = g.a_v(i);
    const double rw = g.m(a, 0.0);
    const double r0 = g.m(a, g.s_v(0));
    const double r1 = g.m(a, g.s_v(1));
    const double v0 = sol.v[g.id_v(i, 0)];
    const double v1 = sol.v[g.id_v(i, 1)];
    // wall value from the ghost relation (0 for Dirichlet, slip for Navier)
    const double vw = 0.5 * (sol.v_ghost_lo[i] + v0);
    const double slope = (v0 - vw) * (rw - r1) / ((r0 - rw) * (r0 - r1)) +
                         (v1 - vw) * (rw - r0) / ((r1 - rw) * (r1 - r0));
    tr.chi1[i] = -slope;
  }
  for (int i = 0; i < g.na; ++i) {
    // chi2 = -p at the wall, quadratic extrapolation from the first three rows
    const double a = g.a_p(i);
    const double rw = g.m(a, 0.0);
    const double r0 = g.m(a, g.s_p(0));
    const double r1 = g.m(a, g.s_p(1));
    const double r2 = g.m(a, g.s_p(2));
    const double p0 = sol.p[g.id_p(i, 0)];
    const double p1 = sol.p[g.id_p(i, 1)];
    const double p2 = sol.p[g.id_p(i, 2)];
    const double l0 = (rw - r1) * (rw - r2) / ((r0 - r1) * (r0 - r2));
    const double l1 = (rw - r0) * (rw - r2) / ((r1 - r0) * (r1 - r2));
    const double l2 = (rw - r0) * (rw - r1) / ((r2 - r0) * (r2 - r1));
    tr.chi2[i] = -(l0 * p0 + l1 * p1 + l2 * p2);
  }
  return tr;
}

CorrectorBundle build_correctors(const MacroSolution& dirichlet_sol,
                                 const CellSolution& beta_tau,
                                 const CellSolution& beta_nu) {
  if (dirichlet_sol.variant != MacroVariant::Dirichlet)
    throw IncompatibleFieldsError("correctors are built on the dirichlet wall-law solution");
  CorrectorBundle b;
  b.eps = dirichlet_sol.spec.domain.eps;
  b.slip_coefficient = beta_tau.bl_constant(0);
  b.traces = extract_wall_traces(dirichlet_sol);
  b.dirichlet = dirichlet_sol;
  b.beta_tau = beta_tau;
  b.beta_nu = beta_nu;

  // auxiliary problem: smooth annulus, eta_theta = c * chi1 on the wall,
  // zero outer data, no force
  MacroProblemSpec aux = dirichlet_sol.spec;
  aux.variant = MacroVariant::Corrector;
  aux.body_force = nullptr;
  aux.outer_u_theta = [](double) { return 0.0; };
  aux.outer_u_r = nullptr;
  const double c = b.slip_coefficient;
  const WallTraces traces = b.traces;
  aux.inner_u_theta = [traces, c](double th) { return c * traces.chi1_at(th); };
  aux.inner_u_r = nullptr;
  b.eta = solve_macro(aux);
  return b;
}

Eigen::Vector2d CorrectorBundle::eta_eps(double theta, double r) const {
  // cell coordinates: y1 along the wall (tangent e_theta), y2 = (1-r)/eps so
  // the fluid side of the interface is y2 < 0; cell frame legs map to
  // (e_theta, -e_r)
  const double y1 = theta / eps;
  const double y2 = (1.0 - r) / eps;
  const Eigen::Vector2d bt = sample_fluctuation_2d(beta_tau, y1, y2);
  const Eigen::Vector2d bn = sample_fluctuation_2d(beta_nu, y1, y2);
  const double c1 = traces.chi1_at(theta);
  const double c2 = traces.chi2_at(theta);
  const Eigen::Vector2d cellvec = c1 * bt + c2 * bn;
  // (u_r, u_theta) = cell_1 * e_theta + cell_2 * (-e_r)
  return eps * Eigen::Vector2d(-cellvec(1), cellvec(0));
}

Eigen::Vector2d CorrectorBundle::eta_bar_eps(double theta, double r) const {
  return eps * eta.velocity_polar(theta, r);
}

Eigen::Vector2d CorrectorBundle::augmented(double theta, double r) const {
  return dirichlet.velocity_polar(theta, r) + eta_bar_eps(theta, r) +
         eta_eps(theta, r);
}

// ---------------------------------------------------------------------------
// norms

FieldSampler sampler(const MacroSolution& sol) {
  FieldSampler fs;
  fs.period = sol.grid.P;
  fs.n_sectors = sol.grid.n_sectors;
  // capture by value: solutions are immutable after the solve
  fs.vel = [sol](double th, double r) { return sol.velocity_polar(th, r); };
  return fs;
}

FieldNorms error_norms(const FieldSampler& a, const FieldSampler& b, double r_lo,
                       double r_hi, const NormQuadrature& quad) {
  if (a.period <= 0) throw IncompatibleFieldsError("sampler has no period");
  const double P = a.period;
  const int nS = a.n_sectors;
  const int nt = quad.na, nr = quad.ns;
  const double dth = P / nt;

  // radial grading of the quadrature grid
  const double gap = r_hi - r_lo;
  double kq = 0.0;
  if (quad.wall_spacing > 0) kq = solve_kappa(nr * quad.wall_spacing / gap);
  auto gmap = [&](double sg) {
    return kq == 0.0 ? sg : std::expm1(kq * sg) / std::expm1(kq);
  };
  auto dgmap = [&](double sg) {
    return kq == 0.0 ? 1.0 : kq * std::exp(kq * sg) / std::expm1(kq);
  };

  // sample the difference field on the tensor grid
  std::vector<double> wr(size_t(nt) * nr), wt(size_t(nt) * nr), rad(nr), drad(nr);
  for (int l = 0; l < nr; ++l) {
    const double sg = (l + 0.5) / nr;
    rad[l] = r_lo + gmap(sg) * gap;
    drad[l] = dgmap(sg) * gap / nr;  // radial cell width
  }
  for (int j = 0; j < nt; ++j) {
    const double th = (j + 0.5) * dth;
    for (int l = 0; l < nr; ++l) {
      Eigen::Vector2d d = a.vel(th, rad[l]);
      if (b.vel) d -= b.vel(th, rad[l]);
      wr[size_t(j) * nr + l] = d(0);
      wt[size_t(j) * nr + l] = d(1);
    }
  }

  auto at = [&](const std::vector<double>& f, int j, int l) {
    return f[size_t(((j % nt) + nt) % nt) * nr + l];
  };

  FieldNorms out;
  double l2 = 0, h1 = 0, w11 = 0;
  for (int j = 0; j < nt; ++j) {
    for (int l = 0; l < nr; ++l) {
      const double r = rad[l];
      const double vol = r * dth * drad[l];
      const double a_r = at(wr, j, l), a_t = at(wt, j, l);

      // theta-derivatives: centered, periodic over the sector
      const double dth_r = (at(wr, j + 1, l) - at(wr, j - 1, l)) / (2 * dth);
      const double dth_t = (at(wt, j + 1, l) - at(wt, j - 1, l)) / (2 * dth);
      // r-derivatives: centered inside, one-sided at the edges
      double dr_r, dr_t;
      if (l == 0) {
        dr_r = (at(wr, j, 1) - at(wr, j, 0)) / (rad[1] - rad[0]);
        dr_t = (at(wt, j, 1) - at(wt, j, 0)) / (rad[1] - rad[0]);
      } else if (l == nr - 1) {
        dr_r = (at(wr, j, l) - at(wr, j, l - 1)) / (rad[l] - rad[l - 1]);
        dr_t = (at(wt, j, l) - at(wt, j, l - 1)) / (rad[l] - rad[l - 1]);
      } else {
        dr_r = (at(wr, j, l + 1) - at(wr, j, l - 1)) / (rad[l + 1] - rad[l - 1]);
        dr_t = (at(wt, j, l + 1) - at(wt, j, l - 1)) / (rad[l + 1] - rad[l - 1]);
      }

      // polar gradient tensor
      const double g11 = dr_r;
      const double g12 = dth_r / r - a_t / r;
      const double g21 = dr_t;
      const double g22 = dth_t / r + a_r / r;
      const double gf2 = g11 * g11 + g12 * g12 + g21 * g21 + g22 * g22;

      l2 += (a_r * a_r + a_t * a_t) * vol;
      h1 += gf2 * vol;
      w11 += std::sqrt(gf2) * vol;
    }
  }
  out.l2 = std::sqrt(l2 * nS);
  out.h1semi = std::sqrt(h1 * nS);
  out.w11 = w11 * nS;
  return out;
}

FieldNorms field_norms(const FieldSampler& a, double r_lo, double r_hi,
                       const NormQuadrature& quad) {
  FieldSampler zero;
  zero.period = a.period;
  zero.n_sectors = a.n_sectors;
  zero.vel = nullptr;
  return error_norms(a, zero, r_lo, r_hi, quad);
}

}  // namespace roughflow
