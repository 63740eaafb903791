#include "roughflow/divergence_lab.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace roughflow {

double LabField::integral() const {
  double s = 0;
  for (double x : v) s += x;
  return s * grid.h * grid.h;
}

double LabField::lq_norm_q(double q) const {
  double s = 0;
  for (double x : v) s += std::pow(std::abs(x), q);
  return s * grid.h * grid.h;
}

double Rect::diam() const { return std::hypot(width(), height()); }

Rect intersect(const Rect& a, const Rect& b) {
  Rect r;
  r.x0 = std::max(a.x0, b.x0);
  r.y0 = std::max(a.y0, b.y0);
  r.x1 = std::min(a.x1, b.x1);
  r.y1 = std::min(a.y1, b.y1);
  if (r.empty()) return Rect{};
  return r;
}

bool StarDecomposition::in_domain(double x, double y) const {
  for (const auto& pc : pieces)
    if (pc.box.contains(x, y)) return true;
  return false;
}

Rect StarDecomposition::overlap(int k) const {
  if (kind == DecompositionKind::Star)
    return intersect(pieces[0].box, pieces[k].box);
  return intersect(pieces[k].box, pieces[k + 1].box);
}

namespace {

bool on_lattice(double x, double origin, double h) {
  const double t = (x - origin) / h;
  return std::abs(t - std::round(t)) < 1e-9;
}

// Discrete area of a rect = (number of grid cell centers inside) * h^2. Used
// everywhere instead of the analytic area so the splitting identities are
// exact in floating point.
double discrete_area(const Rect& r, const LabGrid& g) {
  long cnt = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (r.contains(g.cx(i), g.cy(j))) ++cnt;
  return double(cnt) * g.h * g.h;
}

}  // namespace

void validate_decomposition(const StarDecomposition& decomp) {
  const auto& g = decomp.grid;
  if (decomp.pieces.empty()) throw DecompositionError("decomposition has no pieces");
  if (g.nx <= 0 || g.ny <= 0 || g.h <= 0)
    throw DecompositionError("decomposition grid is empty");

  for (std::size_t k = 0; k < decomp.pieces.size(); ++k) {
    const auto& pc = decomp.pieces[k];
    if (pc.box.empty()) throw DecompositionError("piece box is empty");
    if (pc.star_radius <= 0) throw DecompositionError("piece star radius not positive");
    // ball inside the box
    if (pc.star_center.x() - pc.star_radius < pc.box.x0 - 1e-12 ||
        pc.star_center.x() + pc.star_radius > pc.box.x1 + 1e-12 ||
        pc.star_center.y() - pc.star_radius < pc.box.y0 - 1e-12 ||
        pc.star_center.y() + pc.star_radius > pc.box.y1 + 1e-12)
      throw DecompositionError("star ball not contained in its piece");
    // star-shapedness by ray sampling: segments from ball points to boundary
    // points stay inside (trivial for rectangles, checked anyway)
    for (int bi = 0; bi < 16; ++bi) {
      const double t = bi / 16.0;
      const double bx[4] = {pc.box.x0 + t * pc.box.width(), pc.box.x1,
                            pc.box.x1 - t * pc.box.width(), pc.box.x0};
      const double by[4] = {pc.box.y0, pc.box.y0 + t * pc.box.height(),
                            pc.box.y1, pc.box.y1 - t * pc.box.height()};
      for (int e = 0; e < 4; ++e)
        for (int ci = 0; ci < 4; ++ci) {
          const double ang = 2 * M_PI * ci / 4.0;
          const double sx = pc.star_center.x() + 0.5 * pc.star_radius * std::cos(ang);
          const double sy = pc.star_center.y() + 0.5 * pc.star_radius * std::sin(ang);
          for (int s = 1; s < 8; ++s) {
            const double u = s / 8.0;
            const double px = sx + u * (bx[e] - sx), py = sy + u * (by[e] - sy);
            if (px < pc.box.x0 - 1e-12 || px > pc.box.x1 + 1e-12 ||
                py < pc.box.y0 - 1e-12 || py > pc.box.y1 + 1e-12)
              throw DecompositionError("piece is not star-shaped w.r.t. its ball");
          }
        }
    }
    // grid alignment of corners
    if (!on_lattice(pc.box.x0, g.x0, g.h) || !on_lattice(pc.box.x1, g.x0, g.h) ||
        !on_lattice(pc.box.y0, g.y0, g.h) || !on_lattice(pc.box.y1, g.y0, g.h))
      throw DecompositionError("piece corners not aligned with the shared grid");
    // shape constant: diameter vs star radius
    if (pc.box.diam() / pc.star_radius > decomp.shape_constant + 1e-9)
      throw DecompositionError("diam/R exceeds the declared shape constant");
  }

  const int n = static_cast<int>(decomp.pieces.size());
  if (decomp.kind == DecompositionKind::Star) {
    for (int k = 1; k < n; ++k) {
      const Rect ov = decomp.overlap(k);
      if (ov.empty() || discrete_area(ov, g) == 0)
        throw DecompositionError("micro piece does not overlap the macro piece");
      // micro/overlap area ratio bounded by l
      if (decomp.pieces[k].box.area() / ov.area() > decomp.shape_constant + 1e-9)
        throw DecompositionError("piece/overlap area ratio exceeds the shape constant");
      for (int l = k + 1; l < n; ++l)
        if (!intersect(decomp.pieces[k].box, decomp.pieces[l].box).empty())
          throw DecompositionError("micro pieces are not pairwise disjoint");
    }
  } else {
    for (int j = 0; j + 1 < n; ++j) {
      const Rect ov = decomp.overlap(j);
      if (ov.empty() || discrete_area(ov, g) == 0)
        throw DecompositionError("consecutive chain pieces do not overlap");
    }
  }
}

namespace {

void check_mean_zero(const LabField& f) {
  const double scale = std::max(f.lq_norm_q(2.0), 1e-300);
  if (std::abs(f.integral()) > 1e-9 * std::sqrt(scale) + 1e-13)
    throw CompatibilityError("source field is not mean-zero");
}

SplitSource finalize(const StarDecomposition& decomp, const LabField& f,
                     std::vector<LabField> pieces, double q) {
  SplitSource out;
  out.q = q;
  out.means.resize(pieces.size());
  out.norm_ratios.resize(pieces.size());
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    out.means[k] = pieces[k].integral();
    // ||f_k||_q^q vs ||f||_q^q over the same piece
    double num = pieces[k].lq_norm_q(q);
    double den = 0;
    const auto& g = f.grid;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        if (decomp.pieces[k].box.contains(g.cx(i), g.cy(j)))
          den += std::pow(std::abs(f.v[g.id(i, j)]), q);
    den *= g.h * g.h;
    out.norm_ratios[k] = den > 0 ? num / den : 0.0;
  }
  out.pieces = std::move(pieces);
  return out;
}

}  // namespace

SplitSource split_source_star(const StarDecomposition& decomp, const LabField& f,
                              double q) {
  if (decomp.kind != DecompositionKind::Star)
    throw DecompositionError("star split requires a star-layout decomposition");
  check_mean_zero(f);
  const auto& g = f.grid;
  const int n = static_cast<int>(decomp.pieces.size());
  std::vector<LabField> pieces(n);
  for (auto& p : pieces) {
    p.grid = g;
    p.v.assign(g.cells(), 0.0);
  }

  // micro pieces: f on G_k \ G_0, f - a_k on G_k n G_0
  for (int k = 1; k < n; ++k) {
    const Rect& box = decomp.pieces[k].box;
    const Rect ov = decomp.overlap(k);
    const double ov_area = discrete_area(ov, g);
    if (ov_area == 0) throw DecompositionError("empty discrete overlap");
    double mass = 0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        if (box.contains(g.cx(i), g.cy(j))) mass += f.v[g.id(i, j)];
    const double a_k = mass * g.h * g.h / ov_area;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double x = g.cx(i), y = g.cy(j);
        if (!box.contains(x, y)) continue;
        const int id = g.id(i, j);
        pieces[k].v[id] = ov.contains(x, y) ? f.v[id] - a_k : f.v[id];
      }
  }
  // macro piece: remainder (vanishes outside G_0 by construction)
  for (int id = 0; id < g.cells(); ++id) {
    double s = 0;
    for (int k = 1; k < n; ++k) s += pieces[k].v[id];
    pieces[0].v[id] = f.v[id] - s;
  }
  return finalize(decomp, f, std::move(pieces), q);
}

SplitSource split_source_chain(const StarDecomposition& decomp, const LabField& f,
                               double q) {
  if (decomp.kind != DecompositionKind::Chain)
    throw DecompositionError("chain split requires a chain-layout decomposition");
  check_mean_zero(f);
  const auto& g = f.grid;
  const int n = static_cast<int>(decomp.pieces.size());
  std::vector<LabField> pieces(n);
  for (auto& p : pieces) {
    p.grid = g;
    p.v.assign(g.cells(), 0.0);
  }

  // membership masks and running unions
  auto in_piece = [&](int k, double x, double y) {
    return decomp.pieces[k].box.contains(x, y);
  };
  auto in_union_upto = [&](int jmax, double x, double y) {  // G_1 .. G_jmax (1-based)
    for (int i = 0; i < jmax; ++i)
      if (in_piece(i, x, y)) return true;
    return false;
  };

  // a_j, j = 1..n-1 (1-based as in the construction)
  std::vector<double> a(n, 0.0);
  for (int j = 1; j < n; ++j) {
    double mass = 0, denom_cells = 0;
    const Rect ov = decomp.overlap(j - 1);  // G_j n G_{j+1}, 0-based j-1
    for (int cj = 0; cj < g.ny; ++cj)
      for (int ci = 0; ci < g.nx; ++ci) {
        const double x = g.cx(ci), y = g.cy(cj);
        if (in_union_upto(j, x, y)) mass += f.v[g.id(ci, cj)];
        if (ov.contains(x, y) && !in_union_upto(j - 1, x, y)) denom_cells += 1;
      }
    if (denom_cells == 0) throw DecompositionError("empty effective chain overlap");
    a[j] = mass / denom_cells;  // h^2 factors cancel
  }

  for (int j = 1; j <= n; ++j) {  // piece index, 1-based
    const int k = j - 1;
    const Rect& box = decomp.pieces[k].box;
    const Rect in_ov = j >= 2 ? decomp.overlap(k - 1) : Rect{};
    const Rect out_ov = j <= n - 1 ? decomp.overlap(k) : Rect{};
    for (int cj = 0; cj < g.ny; ++cj)
      for (int ci = 0; ci < g.nx; ++ci) {
        const double x = g.cx(ci), y = g.cy(cj);
        if (!box.contains(x, y)) continue;
        const int id = g.id(ci, cj);
        if (j >= 3 && in_union_upto(j - 2, x, y)) {
          pieces[k].v[id] = 0.0;  // already covered two or more pieces back
        } else if (j >= 2 && in_ov.contains(x, y)) {
          pieces[k].v[id] = a[j - 1];  // incoming overlap carries the running mass
        } else if (j <= n - 1 && !out_ov.empty() && out_ov.contains(x, y) &&
                   !in_union_upto(j - 1, x, y)) {
          pieces[k].v[id] = f.v[id] - a[j];
        } else if (!in_union_upto(j - 1, x, y)) {
          pieces[k].v[id] = f.v[id];
        }
      }
  }
  return finalize(decomp, f, std::move(pieces), q);
}

double power_mean_constant(double q) { return std::pow(2.0, q - 1.0); }

DivergenceSolution divergence_solve(const Rect& piece, const LabField& f_k,
                                    double tol) {
  const LabGrid& g = f_k.grid;
  const double h = g.h;
  if (!on_lattice(piece.x0, g.x0, h) || !on_lattice(piece.y0, g.y0, h) ||
      !on_lattice(piece.x1, g.x0, h) || !on_lattice(piece.y1, g.y0, h))
    throw DecompositionError("piece not aligned with the field grid");

  DivergenceSolution sol;
  sol.box = piece;
  sol.h = h;
  sol.nx = static_cast<int>(std::round(piece.width() / h));
  sol.ny = static_cast<int>(std::round(piece.height() / h));
  const int nx = sol.nx, ny = sol.ny;
  const int i0 = static_cast<int>(std::round((piece.x0 - g.x0) / h));
  const int j0 = static_cast<int>(std::round((piece.y0 - g.y0) / h));

  // restrict the source to the piece; must be (discretely) mean-zero there
  std::vector<double> f(nx * ny, 0.0);
  double mean = 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int gi = i0 + i, gj = j0 + j;
      double val = 0;
      if (gi >= 0 && gi < g.nx && gj >= 0 && gj < g.ny) val = f_k.v[g.id(gi, gj)];
      f[i + nx * j] = val;
      mean += val;
    }
  double fl2 = 0;
  for (double x : f) fl2 += x * x;
  fl2 = std::sqrt(fl2 * h * h);
  if (std::abs(mean) * h * h > 1e-10 * std::max(fl2, 1e-300) + 1e-13)
    throw CompatibilityError("piece source is not mean-zero on the piece");

  const int NU = (nx + 1) * ny, NV = nx * (ny + 1), NP = nx * ny;
  const int OU = 0, OV = NU, OP = NU + NV, OM = OP + NP;
  const int N = OM + 1;
  auto iu = [&](int i, int j) { return OU + i + (nx + 1) * j; };
  auto iv = [&](int i, int j) { return OV + i + nx * j; };
  auto ip = [&](int i, int j) { return OP + i + nx * j; };

  SparseBuilder M(N, N);
  Vec rhs = Vec::Zero(N);
  const double ih2 = 1.0 / (h * h), ih = 1.0 / h;

  // u momentum: -lap u + dp/dx = 0; u = 0 on the side walls, mirror ghosts at
  // the top/bottom walls
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const int row = iu(i, j);
      if (i == 0 || i == nx) {
        M.add(row, row, 1.0);
        continue;
      }
      double diag = 4.0 * ih2;
      M.add(row, iu(i - 1, j), -ih2);
      M.add(row, iu(i + 1, j), -ih2);
      if (j > 0) M.add(row, iu(i, j - 1), -ih2); else diag += ih2;
      if (j < ny - 1) M.add(row, iu(i, j + 1), -ih2); else diag += ih2;
      M.add(row, row, diag);
      M.add(row, ip(i, j), ih);
      M.add(row, ip(i - 1, j), -ih);
    }
  // v momentum
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int row = iv(i, j);
      if (j == 0 || j == ny) {
        M.add(row, row, 1.0);
        continue;
      }
      double diag = 4.0 * ih2;
      M.add(row, iv(i, j - 1), -ih2);
      M.add(row, iv(i, j + 1), -ih2);
      if (i > 0) M.add(row, iv(i - 1, j), -ih2); else diag += ih2;
      if (i < nx - 1) M.add(row, iv(i + 1, j), -ih2); else diag += ih2;
      M.add(row, row, diag);
      M.add(row, ip(i, j), ih);
      M.add(row, ip(i, j - 1), -ih);
    }
  // continuity: div u = f, plus the pressure-mean multiplier pair
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int row = ip(i, j);
      M.add(row, iu(i + 1, j), ih);
      M.add(row, iu(i, j), -ih);
      M.add(row, iv(i, j + 1), ih);
      M.add(row, iv(i, j), -ih);
      M.add(row, OM, h * h);
      M.add(OM, row, h * h);
      rhs[row] = f[i + nx * j];
    }

  const SpMat Msp = M.build();
  Vec x = (N <= 60000) ? solve_direct(Msp, rhs, &sol.stats, tol)
                       : solve_ilu_bicgstab(Msp, rhs, &sol.stats, tol);

  sol.u.assign(x.data() + OU, x.data() + OU + NU);
  sol.v.assign(x.data() + OV, x.data() + OV + NV);
  sol.p.assign(x.data() + OP, x.data() + OP + NP);

  // divergence residual and gradient norm
  double maxdiv = 0, grad2 = 0;
  auto uval = [&](int i, int j) {  // with mirror ghosts top/bottom
    if (j < 0) return -sol.u[i + (nx + 1) * 0];
    if (j >= ny) return -sol.u[i + (nx + 1) * (ny - 1)];
    return sol.u[i + (nx + 1) * j];
  };
  auto vval = [&](int i, int j) {
    if (i < 0) return -sol.v[0 + nx * j];
    if (i >= nx) return -sol.v[(nx - 1) + nx * j];
    return sol.v[i + nx * j];
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double div = (uval(i + 1, j) - uval(i, j)) * ih +
                         (vval(i, j + 1) - vval(i, j)) * ih;
      maxdiv = std::max(maxdiv, std::abs(div - f[i + nx * j]));
      const double dudx = (uval(i + 1, j) - uval(i, j)) * ih;
      const double dvdy = (vval(i, j + 1) - vval(i, j)) * ih;
      grad2 += (dudx * dudx + dvdy * dvdy) * h * h;
    }
  for (int j = 0; j <= ny; ++j)  // du/dy at vertices
    for (int i = 0; i <= nx; ++i) {
      const double dudy = (uval(i, j) - uval(i, j - 1)) * ih;
      grad2 += dudy * dudy * h * h;
    }
  for (int j = 0; j <= ny; ++j)  // dv/dx at vertices
    for (int i = 0; i <= nx; ++i) {
      const double dvdx = (vval(i, j) - vval(i - 1, j)) * ih;
      grad2 += dvdx * dvdx * h * h;
    }
  sol.div_residual = maxdiv;
  sol.grad_l2 = std::sqrt(grad2);
  sol.f_l2 = fl2;
  sol.ratio = fl2 > 0 ? sol.grad_l2 / fl2 : 0.0;
  return sol;
}

StarDecomposition make_rough_square_decomposition(double eps) {
  if (eps <= 0 || eps > 0.5) throw DecompositionError("eps must lie in (0, 1/2]");
  StarDecomposition d;
  d.kind = DecompositionKind::Star;
  d.shape_constant = 2.0 * std::sqrt(2.0);
  const double h = eps / 8.0;
  const int m = static_cast<int>(std::floor(1.0 / (2.0 * eps)));

  StarPiece macro;
  macro.box = Rect{0, 0, 1, 1};
  macro.star_center = Eigen::Vector2d(0.5, 0.5);
  macro.star_radius = 0.5;
  d.pieces.push_back(macro);
  for (int k = 0; k < m; ++k) {
    StarPiece pc;
    const double x0 = 2 * k * eps + 0.5 * eps;
    pc.box = Rect{x0, 1.0 - 0.5 * eps, x0 + eps, 1.0 + 0.5 * eps};
    pc.star_center = Eigen::Vector2d(x0 + 0.5 * eps, 1.0);
    pc.star_radius = 0.5 * eps;
    d.pieces.push_back(pc);
  }

  d.grid.x0 = 0;
  d.grid.y0 = 0;
  d.grid.h = h;
  d.grid.nx = static_cast<int>(std::round(1.0 / h));
  d.grid.ny = static_cast<int>(std::round((1.0 + 0.5 * eps) / h));
  validate_decomposition(d);
  return d;
}

LabField random_mean_zero_field(const StarDecomposition& decomp, std::uint64_t seed) {
  LabField f;
  f.grid = decomp.grid;
  f.v.assign(f.grid.cells(), 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  double sum = 0;
  long cnt = 0;
  std::vector<int> idx;
  for (int j = 0; j < f.grid.ny; ++j)
    for (int i = 0; i < f.grid.nx; ++i)
      if (decomp.in_domain(f.grid.cx(i), f.grid.cy(j))) {
        const int id = f.grid.id(i, j);
        f.v[id] = uni(rng);
        sum += f.v[id];
        idx.push_back(id);
        ++cnt;
      }
  const double shift = sum / double(cnt);
  for (int id : idx) f.v[id] -= shift;
  return f;
}

std::vector<ConstantStudyRow> constant_study(const std::vector<double>& eps_values,
                                             std::uint64_t seed) {
  std::vector<ConstantStudyRow> rows;
  for (double eps : eps_values) {
    StarDecomposition d = make_rough_square_decomposition(eps);
    LabField f = random_mean_zero_field(d, seed);
    SplitSource split = split_source_star(d, f, 2.0);

    ConstantStudyRow row;
    row.eps = eps;
    row.m = static_cast<int>(d.pieces.size()) - 1;
    row.shape_constant = d.shape_constant;
    row.split_bound =
        power_mean_constant(2.0) * (1.0 + std::pow(d.shape_constant, 1.0));
    for (std::size_t k = 1; k < split.pieces.size(); ++k)
      row.max_norm_ratio = std::max(row.max_norm_ratio, split.norm_ratios[k]);

    // per-piece solves, accumulated on a global MAC grid over the bounding box
    const LabGrid& g = d.grid;
    const int gnx = g.nx, gny = g.ny;
    std::vector<double> gu((gnx + 1) * gny, 0.0), gv(gnx * (gny + 1), 0.0);
    double global_maxdiv = 0;
    for (std::size_t k = 0; k < d.pieces.size(); ++k) {
      DivergenceSolution s = divergence_solve(d.pieces[k].box, split.pieces[k]);
      if (k == 0) row.macro_ratio = s.ratio;
      global_maxdiv = std::max(global_maxdiv, s.div_residual);
      const int i0 = static_cast<int>(std::round((s.box.x0 - g.x0) / g.h));
      const int j0 = static_cast<int>(std::round((s.box.y0 - g.y0) / g.h));
      for (int j = 0; j < s.ny; ++j)
        for (int i = 0; i <= s.nx; ++i)
          gu[(i0 + i) + (gnx + 1) * (j0 + j)] += s.u[i + (s.nx + 1) * j];
      for (int j = 0; j <= s.ny; ++j)
        for (int i = 0; i < s.nx; ++i)
          gv[(i0 + i) + gnx * (j0 + j)] += s.v[i + s.nx * j];
    }

    // global gradient norm: zero outside the union, mirror-free (the summed
    // field vanishes on and outside the domain boundary faces)
    const double h = g.h, ih = 1.0 / h;
    double grad2 = 0;
    auto gud = [&](int i, int j) {
      if (i < 0 || i > gnx || j < 0 || j >= gny) return 0.0;
      return gu[i + (gnx + 1) * j];
    };
    auto gvd = [&](int i, int j) {
      if (i < 0 || i >= gnx || j < 0 || j > gny) return 0.0;
      return gv[i + gnx * j];
    };
    for (int j = 0; j < gny; ++j)
      for (int i = 0; i < gnx; ++i) {
        const double dudx = (gud(i + 1, j) - gud(i, j)) * ih;
        const double dvdy = (gvd(i, j + 1) - gvd(i, j)) * ih;
        grad2 += (dudx * dudx + dvdy * dvdy) * h * h;
      }
    for (int j = 0; j <= gny; ++j)
      for (int i = 0; i <= gnx; ++i) {
        const double dudy = (gud(i, j) - gud(i, j - 1)) * ih;
        const double dvdx = (gvd(i, j) - gvd(i - 1, j)) * ih;
        grad2 += (dudy * dudy + dvdx * dvdx) * h * h;
      }
    const double fl2 = std::sqrt(f.lq_norm_q(2.0));
    row.global_ratio = fl2 > 0 ? std::sqrt(grad2) / fl2 : 0.0;
    row.global_div_residual = global_maxdiv;
    const double cbar = power_mean_constant(2.0);
    row.envelope = row.macro_ratio *
                   std::sqrt(2.0 * cbar * (1.0 + cbar + d.shape_constant));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace roughflow
