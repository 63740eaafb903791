#include "roughflow/cell_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace roughflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

inline int wrap(int i, int n) { return ((i % n) + n) % n; }

// Everything the assembler needs to know about the staggered layout.
struct Layout {
  int d = 2, n = 0, nv = 0, nlat = 0, kS = 0;
  double h = 0, depth = 0;

  int decode0(int lat) const { return lat % n; }
  int decode1(int lat) const { return lat / n; }
  int encode(int i0, int i1) const { return i0 + n * i1; }

  int lat_neighbor(int lat, int dim, int step) const {
    int i0 = decode0(lat), i1 = decode1(lat);
    if (dim == 0)
      i0 = wrap(i0 + step, n);
    else
      i1 = wrap(i1 + step, n);
    return encode(i0, i1);
  }

  // lateral coordinate of component-c nodes along lateral dim j
  double lat_coord(int c, int j, int idx) const {
    return (idx + (j == c ? 0.0 : 0.5)) * h;
  }
  double y_center(int k) const { return -depth + (k + 0.5) * h; }
  double y_face(int k) const { return -depth + k * h; }

  int layers(int c) const { return c == d - 1 ? nv + 1 : nv; }
  double node_y(int c, int k) const { return c == d - 1 ? y_face(k) : y_center(k); }
  int node(int lat, int k) const { return k * nlat + lat; }
};

struct Workspace {
  Layout L;
  std::vector<std::vector<double>> wall;  // [c][lat]
  std::vector<double> wall_p;             // at cell-center lateral coords
  std::vector<std::vector<char>> vfluid;  // [c][node]
  std::vector<char> cfluid;               // [cell]
  std::vector<std::vector<int>> vid;      // [c][node] -> unknown id or -1
  std::vector<int> pid;                   // [cell] -> pressure id or -1
  int nu = 0, np = 0;
};

double eval_wall(const CellProblemSpec& spec, const Layout& L, int c_or_center,
                 int lat) {
  const int sd = L.d - 1;
  Vec fast(sd);
  for (int j = 0; j < sd; ++j) {
    const int idx = (j == 0) ? L.decode0(lat) : L.decode1(lat);
    double x = (c_or_center >= 0) ? L.lat_coord(c_or_center, j, idx)
                                  : (idx + 0.5) * L.h;
    x -= std::floor(x);  // wrap into the fast period
    fast(j) = x;
  }
  Vec slow = spec.coeffs.base_point.size() ? spec.coeffs.base_point : Vec::Zero(sd);
  return spec.profile(slow, fast);
}

Workspace make_workspace(const CellProblemSpec& spec) {
  Workspace w;
  Layout& L = w.L;
  L.d = spec.coeffs.dim;
  L.n = spec.resolution;
  if (L.n < 4) throw ResolutionError("cell resolution must be at least 4");
  L.h = 1.0 / L.n;

  double depth = spec.truncation_depth > 0 ? spec.truncation_depth : spec.auto_depth();
  L.depth = std::ceil(depth * L.n) / double(L.n);  // grid-aligned
  L.kS = static_cast<int>(std::lround(L.depth * L.n));

  const double height = std::ceil(std::max(spec.profile.bound_M, 0.0) * L.n + 0.5) / double(L.n);
  L.nv = L.kS + static_cast<int>(std::lround(height * L.n));
  L.nlat = (L.d == 2) ? L.n : L.n * L.n;

  w.wall.resize(L.d);
  for (int c = 0; c < L.d; ++c) {
    w.wall[c].resize(L.nlat);
    for (int lat = 0; lat < L.nlat; ++lat) w.wall[c][lat] = eval_wall(spec, L, c, lat);
  }
  w.wall_p.resize(L.nlat);
  for (int lat = 0; lat < L.nlat; ++lat) w.wall_p[lat] = eval_wall(spec, L, -1, lat);

  w.vfluid.resize(L.d);
  w.vid.resize(L.d);
  for (int c = 0; c < L.d; ++c) {
    const int nl = L.layers(c);
    w.vfluid[c].assign(size_t(nl) * L.nlat, 0);
    w.vid[c].assign(size_t(nl) * L.nlat, -1);
    for (int k = 0; k < nl; ++k)
      for (int lat = 0; lat < L.nlat; ++lat)
        if (L.node_y(c, k) < w.wall[c][lat]) {
          w.vfluid[c][L.node(lat, k)] = 1;
          w.vid[c][L.node(lat, k)] = w.nu++;
        }
  }
  w.cfluid.assign(size_t(L.nv) * L.nlat, 0);
  w.pid.assign(size_t(L.nv) * L.nlat, -1);
  for (int k = 0; k < L.nv; ++k)
    for (int lat = 0; lat < L.nlat; ++lat)
      if (L.y_center(k) < w.wall_p[lat]) {
        w.cfluid[L.node(lat, k)] = 1;
        w.pid[L.node(lat, k)] = w.np++;
      }
  return w;
}

// Momentum block, integrated form: rows are control-volume integrals, so the
// matrix is symmetric and the pressure block is exactly C^T.
void assemble_momentum(const CellProblemSpec& spec, const Workspace& w,
                       SparseBuilder& K, Vec& rhs) {
  const Layout& L = w.L;
  const Mat& A = spec.coeffs.A;
  const int d = L.d;
  const double h = L.h;
  const double hd2 = std::pow(h, d - 2);  // h^{d-2}
  const double hd1 = std::pow(h, d - 1);

  for (int c = 0; c < d; ++c) {
    const int nl = L.layers(c);
    for (int k = 0; k < nl; ++k) {
      for (int lat = 0; lat < L.nlat; ++lat) {
        const int id = w.vid[c][L.node(lat, k)];
        if (id < 0) continue;
        const bool half_cv = (c == d - 1 && k == 0);  // bottom face node
        const double lat_scale = half_cv ? 0.5 : 1.0;

        // vertical diffusion (a_dd = 1)
        {
          // up neighbor
          if (k + 1 < nl && w.vfluid[c][L.node(lat, k + 1)]) {
            K.add(id, id, hd2);
            K.add(id, w.vid[c][L.node(lat, k + 1)], -hd2);
          } else {
            // wall-cut ghost: beta vanishes at the exact wall height
            double delta = w.wall[c][lat] - L.node_y(c, k);
            delta = std::max(delta, 1e-9 * h);
            K.add(id, id, hd1 / delta);
          }
          // down neighbor
          if (k - 1 >= 0) {
            // below the node is always fluid (wall is a graph from above)
            K.add(id, id, hd2);
            K.add(id, w.vid[c][L.node(lat, k - 1)], -hd2);
          }
          // k == 0: homogeneous Neumann (tangential) / half-CV bottom face
          // (vertical): no flux through the cut.
        }

        // lateral diffusion
        for (int j = 0; j < d - 1; ++j) {
          const double a = A(j, j) * lat_scale;
          for (int step : {-1, 1}) {
            const int nlat_idx = L.lat_neighbor(lat, j, step);
            if (w.vfluid[c][L.node(nlat_idx, k)]) {
              K.add(id, id, a * hd2);
              K.add(id, w.vid[c][L.node(nlat_idx, k)], -a * hd2);
            } else {
              // stair-step: solid neighbor holds the no-slip value 0
              K.add(id, id, a * hd2);
            }
          }
        }

        // lateral cross terms 2*A_jl d_j d_l (3D only)
        if (d == 3 && A(0, 1) != 0.0) {
          const double coef = A(0, 1) * hd2 / 2.0 * lat_scale;
          for (int s0 : {-1, 1})
            for (int s1 : {-1, 1}) {
              const int nl_idx = L.lat_neighbor(L.lat_neighbor(lat, 0, s0), 1, s1);
              const int nid = w.vid[c][L.node(nl_idx, k)];
              if (nid >= 0) K.add(id, nid, -coef * s0 * s1);
            }
        }

        // interface load: -lambda * delta_S, finite-volume weights
        if (c == d - 1) {
          if (k == L.kS) rhs(id) -= spec.jump_vector(c) * hd1;
        } else {
          if (k == L.kS || k == L.kS - 1) rhs(id) -= 0.5 * spec.jump_vector(c) * hd1;
        }
      }
    }
  }
}

// Integrated divergence of B^T beta over each fluid cell. Off-component
// contributions are 4-point averages onto the face; out-of-range vertical
// layers mirror (Neumann bottom) or read the no-slip zero (wall).
void assemble_divergence(const CellProblemSpec& spec, const Workspace& w,
                         SparseBuilder& C) {
  const Layout& L = w.L;
  const Mat& B = spec.coeffs.B;
  const int d = L.d;
  const double hd1 = std::pow(L.h, d - 1);

  auto lat_shift = [&](int lat, int dim, int step) {
    return step == 0 ? lat : L.lat_neighbor(lat, dim, step);
  };
  auto add_vel = [&](int row, int c, int lat, int k, double coef) {
    if (k < 0) k = -k - 1;  // mirror tangential centers across the bottom face
    if (k >= L.layers(c)) return;
    const int id = w.vid[c][L.node(lat, k)];
    if (id >= 0) C.add(row, id, coef);
  };

  for (int k = 0; k < L.nv; ++k) {
    for (int lat = 0; lat < L.nlat; ++lat) {
      const int row = w.pid[L.node(lat, k)];
      if (row < 0) continue;

      // vertical faces (direction d-1): k (lower, sign -) and k+1 (upper, +)
      for (int s : {0, 1}) {
        const double sgn = s ? 1.0 : -1.0;
        const int kf = k + s;  // face index for the vertical component
        for (int c = 0; c < d; ++c) {
          const double coef = sgn * B(c, d - 1) * hd1;
          if (coef == 0.0) continue;
          if (c == d - 1) {
            add_vel(row, c, lat, kf, coef);
          } else {
            // beta_c on c-faces / vertical centers: average the 4 neighbors
            // (c-faces i_c, i_c+1; centers kf-1, kf)
            for (int sc : {0, 1})
              for (int sk : {-1, 0})
                add_vel(row, c, lat_shift(lat, c, sc), kf + sk, coef / 4.0);
          }
        }
      }

      // lateral faces in direction j: at i_j (lower, -) and i_j+1 (upper, +)
      for (int j = 0; j < d - 1; ++j) {
        for (int s : {0, 1}) {
          const double sgn = s ? 1.0 : -1.0;
          for (int c = 0; c < d; ++c) {
            const double coef = sgn * B(c, j) * hd1;
            if (coef == 0.0) continue;
            if (c == j) {
              add_vel(row, c, lat_shift(lat, j, s), k, coef);
            } else if (c == d - 1) {
              // vertical component onto a lateral face: j-centers s-1 and s,
              // vertical faces k and k+1
              for (int sj : {s - 1, s})
                for (int sk : {0, 1})
                  add_vel(row, c, lat_shift(lat, j, sj), k + sk, coef / 4.0);
            } else {
              // other lateral component (3D): j-centers s-1, s; c-faces 0, 1
              for (int sj : {s - 1, s})
                for (int sc : {0, 1})
                  add_vel(row, c, lat_shift(lat_shift(lat, j, sj), c, sc), k,
                          coef / 4.0);
            }
          }
        }
      }
    }
  }
}

std::vector<std::pair<double, double>> compute_decay_samples(const CellSolution& sol);

}  // namespace

double CellProblemSpec::auto_depth() const {
  const double alpha = decay_rate_bound(coeffs);
  return std::max(3.0, std::ceil(18.5 / alpha));
}

int CellGrid::n_lat_nodes() const { return d == 2 ? n : n * n; }

int CellSolution::lat_index(const std::vector<int>& i) const {
  return grid.d == 2 ? i[0] : i[0] + grid.n * i[1];
}

CellSolution solve_cell(const CellProblemSpec& spec) {
  if (spec.jump_vector.size() != spec.coeffs.dim)
    throw InvalidCoefficientsError("jump vector dimension mismatch");
  Workspace w = make_workspace(spec);
  const Layout& L = w.L;

  SparseBuilder Kb(w.nu, w.nu);
  Vec rhs_mom = Vec::Zero(w.nu);
  assemble_momentum(spec, w, Kb, rhs_mom);
  SparseBuilder Cb(w.np, w.nu);
  assemble_divergence(spec, w, Cb);

  const SpMat K = Kb.build();
  const SpMat C = Cb.build();

  Vec x;
  SolveStats stats;
  // direct LU is competitive only for 2D stencils; 3D fill-in makes the
  // Schur-CG path faster already at a few thousand unknowns
  const bool use_direct = (L.d == 2);
  if (use_direct) {
    SparseBuilder Mb(w.nu + w.np, w.nu + w.np);
    Mb.trips = Kb.trips;
    for (const auto& t : Cb.trips) {
      Mb.add(w.nu + t.row(), t.col(), t.value());
      Mb.add(t.col(), w.nu + t.row(), t.value());
    }
    Vec rhs = Vec::Zero(w.nu + w.np);
    rhs.head(w.nu) = rhs_mom;
    x = solve_direct(Mb.build(), rhs, &stats, spec.tolerance);
  } else {
    x = solve_schur_cg(K, C, rhs_mom, Vec::Zero(w.np), &stats, spec.tolerance);
  }

  CellSolution sol;
  sol.spec = spec;
  sol.grid.d = L.d;
  sol.grid.n = L.n;
  sol.grid.nv = L.nv;
  sol.grid.kS = L.kS;
  sol.grid.h = L.h;
  sol.grid.depth = L.depth;
  sol.grid.height = (L.nv - L.kS) * L.h;
  sol.beta.resize(L.d);
  sol.beta_fluid = w.vfluid;
  sol.cell_fluid = w.cfluid;
  for (int c = 0; c < L.d; ++c) {
    sol.beta[c].assign(size_t(L.layers(c)) * L.nlat, 0.0);
    for (size_t i = 0; i < sol.beta[c].size(); ++i)
      if (w.vid[c][i] >= 0) sol.beta[c][i] = x(w.vid[c][i]);
  }
  sol.omega.assign(size_t(L.nv) * L.nlat, 0.0);
  for (size_t i = 0; i < sol.omega.size(); ++i)
    if (w.pid[i] >= 0) sol.omega[i] = x(w.nu + w.pid[i]);

  // pressure gauge: mean zero over the flat subregion y_d < 0
  double psum = 0.0;
  int pcount = 0;
  for (int k = 0; k < L.kS; ++k)
    for (int lat = 0; lat < L.nlat; ++lat) {
      psum += sol.omega[L.node(lat, k)];
      ++pcount;
    }
  const double pmean = pcount ? psum / pcount : 0.0;
  for (size_t i = 0; i < sol.omega.size(); ++i)
    if (w.pid[i] >= 0) sol.omega[i] -= pmean;

  // residuals
  Vec beta_vec(w.nu);
  for (int c = 0, at = 0; c < L.d; ++c)
    for (size_t i = 0; i < sol.beta[c].size(); ++i)
      if (w.vid[c][i] >= 0) beta_vec(at++) = sol.beta[c][i];
  const Vec div = C * beta_vec;
  sol.divergence_residual = div.size() ? div.cwiseAbs().maxCoeff() / std::pow(L.h, L.d) : 0.0;
  sol.momentum_residual = stats.relative_residual;
  sol.stats = stats;

  sol.bl_constant = boundary_layer_constant(sol);
  sol.decay_samples = compute_decay_samples(sol);
  return sol;
}

namespace {

// Collocate all velocity components at the cell centers of layer k (k indexes
// pressure layers). Second-order averages from the staggered positions.
std::vector<Vec> collocate_layer(const CellSolution& sol, int k) {
  const CellGrid& g = sol.grid;
  const int d = g.d, n = g.n, nlat = g.n_lat_nodes();
  std::vector<Vec> out(nlat, Vec::Zero(d));
  for (int lat = 0; lat < nlat; ++lat) {
    const int i0 = lat % n, i1 = lat / n;
    for (int c = 0; c < d; ++c) {
      double v;
      if (c == d - 1) {
        v = 0.5 * (sol.beta[c][sol.node_index(lat, k)] +
                   sol.beta[c][sol.node_index(lat, k + 1)]);
      } else {
        const int latp = (c == 0) ? wrap(i0 + 1, n) + (d == 3 ? n * i1 : 0)
                                  : i0 + n * wrap(i1 + 1, n);
        v = 0.5 * (sol.beta[c][sol.node_index(lat, k)] +
                   sol.beta[c][sol.node_index(latp, k)]);
      }
      out[lat](c) = v;
    }
  }
  return out;
}

// Collocated velocity AT the interface plane y_d = 0. The gradient kinks at
// S, so tangential components are extrapolated from below only (second-order
// one-sided), never averaged across the plane.
std::vector<Vec> collocate_interface(const CellSolution& sol) {
  const CellGrid& g = sol.grid;
  const int d = g.d, n = g.n, nlat = g.n_lat_nodes(), kS = g.kS;
  std::vector<Vec> out(nlat, Vec::Zero(d));
  for (int lat = 0; lat < nlat; ++lat) {
    const int i0 = lat % n, i1 = lat / n;
    for (int c = 0; c < d; ++c) {
      if (c == d - 1) {
        out[lat](c) = sol.beta[c][sol.node_index(lat, kS)];
      } else {
        int latp;
        if (d == 2)
          latp = wrap(i0 + 1, n);
        else if (c == 0)
          latp = wrap(i0 + 1, n) + n * i1;
        else
          latp = i0 + n * wrap(i1 + 1, n);
        auto from_below = [&](int l) {
          return 0.5 * (3.0 * sol.beta[c][sol.node_index(l, kS - 1)] -
                        sol.beta[c][sol.node_index(l, kS - 2)]);
        };
        out[lat](c) = 0.5 * (from_below(lat) + from_below(latp));
      }
    }
  }
  return out;
}

std::vector<std::pair<double, double>> compute_decay_samples(const CellSolution& sol) {
  const CellGrid& g = sol.grid;

  const double wlat = std::pow(g.h, g.d - 1);
  std::vector<std::pair<double, double>> samples;
  for (int k = 0; k < g.kS; ++k) {
    auto coll = collocate_layer(sol, k);
    double s2 = 0.0;
    for (const Vec& v : coll) s2 += (v - sol.bl_constant).squaredNorm() * wlat;
    samples.emplace_back(g.y_center(k), std::sqrt(s2));
  }
  return samples;
}

}  // namespace

Vec boundary_layer_constant(const CellSolution& sol) {
  const CellGrid& g = sol.grid;

  auto coll = collocate_interface(sol);
  Vec c = Vec::Zero(g.d);
  for (const Vec& v : coll) c += v;
  return c / g.n_lat_nodes();
}

Vec deep_average(const CellSolution& sol) {
  const CellGrid& g = sol.grid;

  auto coll = collocate_layer(sol, 0);
  Vec c = Vec::Zero(g.d);
  for (const Vec& v : coll) c += v;
  return c / g.n_lat_nodes();
}

// ---------------------------------------------------------------------------
// Fourier mode oracle

namespace {

using Cplx = std::complex<double>;

void dft_1d(std::vector<Cplx>& a, int sign) {
  const int n = static_cast<int>(a.size());
  std::vector<Cplx> out(n, Cplx(0, 0));
  for (int m = 0; m < n; ++m)
    for (int x = 0; x < n; ++x)
      out[m] += a[x] * std::polar(1.0, sign * 2.0 * kPi * m * x / n);
  a = std::move(out);
}

// forward DFT with 1/N normalization so coefficients are Fourier amplitudes
void dft_lateral(std::vector<Cplx>& field, int d, int n, int sign, bool normalize) {
  if (d == 2) {
    dft_1d(field, sign);
  } else {
    std::vector<Cplx> tmp(n);
    for (int i1 = 0; i1 < n; ++i1) {  // rows
      for (int i0 = 0; i0 < n; ++i0) tmp[i0] = field[i0 + n * i1];
      dft_1d(tmp, sign);
      for (int i0 = 0; i0 < n; ++i0) field[i0 + n * i1] = tmp[i0];
    }
    for (int i0 = 0; i0 < n; ++i0) {  // columns
      for (int i1 = 0; i1 < n; ++i1) tmp[i1] = field[i0 + n * i1];
      dft_1d(tmp, sign);
      for (int i1 = 0; i1 < n; ++i1) field[i0 + n * i1] = tmp[i1];
    }
  }
  if (normalize) {
    const double scale = 1.0 / std::pow(double(n), d - 1);
    for (auto& v : field) v *= scale;
  }
}

inline int mode_of(int idx, int n) { return idx <= n / 2 ? idx : idx - n; }

}  // namespace

ModeTrace interface_trace(const CellSolution& sol) {
  const CellGrid& g = sol.grid;
  const int d = g.d, n = g.n, nlat = g.n_lat_nodes();
  auto coll = collocate_interface(sol);
  ModeTrace tr;
  tr.d = d;
  tr.n = n;
  tr.coeffs.resize(nlat, d);
  for (int c = 0; c < d; ++c) {
    std::vector<Cplx> f(nlat);
    for (int lat = 0; lat < nlat; ++lat) f[lat] = coll[lat](c);
    dft_lateral(f, d, n, -1, true);
    for (int lat = 0; lat < nlat; ++lat) tr.coeffs(lat, c) = f[lat];
  }
  tr.pressure = Eigen::VectorXcd::Zero(nlat);
  return tr;
}

ModePrediction mode_oracle(const CellCoefficients& coeffs, const ModeTrace& trace,
                           double y) {
  const int d = coeffs.dim, n = trace.n;
  const int nlat = (d == 2) ? n : n * n;
  const Mat Ablk = coeffs.tangential_block();
  ModePrediction pred;
  pred.velocity.resize(nlat, d);
  pred.pressure.resize(nlat);
  for (int idx = 0; idx < nlat; ++idx) {
    Vec m(d - 1);
    m(0) = mode_of(idx % n, n);
    if (d == 3) m(1) = mode_of(idx / n, n);
    if (m.norm() == 0.0) {
      pred.velocity.row(idx) = trace.coeffs.row(idx);  // constant c^bl
      pred.pressure(idx) = 0.0;
      continue;
    }
    const double xi = m.dot(Ablk * m);
    if (xi <= 0.0)
      throw InvalidCoefficientsError("mode oracle: xi_m <= 0 for a nonzero mode");
    const double sq = std::sqrt(xi);
    Eigen::VectorXcd arg(d);
    for (int j = 0; j < d - 1; ++j) arg(j) = Cplx(0, m(j) / sq);
    arg(d - 1) = Cplx(1, 0);
    const Eigen::VectorXcd v = coeffs.B.cast<Cplx>() * arg;  // B (i m / sqrt(xi), 1)^T
    Cplx dtil(0, 0);
    for (int c = 0; c < d; ++c) dtil += trace.coeffs(idx, c) * v(c);
    const double e = std::exp(2.0 * kPi * sq * y);
    for (int c = 0; c < d; ++c)
      pred.velocity(idx, c) =
          (trace.coeffs(idx, c) - 2.0 * kPi * sq * y * dtil * v(c)) * e;
    pred.pressure(idx) = -4.0 * kPi * sq * dtil * e;
  }
  return pred;
}

ModeOracleErrors mode_oracle_errors(const CellSolution& sol, double depth_lo) {
  const CellGrid& g = sol.grid;
  const int d = g.d, n = g.n, nlat = g.n_lat_nodes();
  const ModeTrace tr = interface_trace(sol);

  double num2 = 0, den2 = 0, fnum2 = 0, fden2 = 0;
  for (int k = 0; k < g.kS; ++k) {
    const double y = g.y_center(k);
    if (y < depth_lo) continue;
    const ModePrediction mp = mode_oracle(sol.spec.coeffs, tr, y);
    auto coll = collocate_layer(sol, k);
    // inverse DFT of the predicted modes onto the collocated grid
    for (int c = 0; c < d; ++c) {
      std::vector<Cplx> f(nlat);
      for (int idx = 0; idx < nlat; ++idx) f[idx] = mp.velocity(idx, c);
      dft_lateral(f, d, n, +1, false);
      double mean_act = 0;
      for (int lat = 0; lat < nlat; ++lat) mean_act += coll[lat](c);
      mean_act /= nlat;
      const double mean_pred = mp.velocity((0), c).real();
      for (int lat = 0; lat < nlat; ++lat) {
        const double pv = f[lat].real();
        const double av = coll[lat](c);
        num2 += (av - pv) * (av - pv);
        den2 += av * av;
        const double pf = pv - mean_pred;
        const double af = av - mean_act;
        fnum2 += (af - pf) * (af - pf);
        fden2 += af * af;
      }
    }
  }
  ModeOracleErrors e;
  e.velocity_rel_l2 = den2 > 0 ? std::sqrt(num2 / den2) : 0.0;
  e.fluctuation_rel_l2 = fden2 > 0 ? std::sqrt(fnum2 / fden2) : 0.0;
  return e;
}

// ---------------------------------------------------------------------------
// slip matrix / energy route

Mat default_tangent_frame(const CellCoefficients& coeffs) {
  const int d = coeffs.dim;
  const Mat F = coeffs.B.inverse().transpose();  // columns: Dphi tangents, nu
  Mat frame(d, d - 1);
  Vec t1 = F.col(0).normalized();
  frame.col(0) = t1;
  if (d == 3) {
    Vec t2 = F.col(1) - t1.dot(F.col(1)) * t1;
    frame.col(1) = t2.normalized();
  }
  return frame;
}

Mat rotate_tangent_frame(const CellCoefficients& coeffs, const Mat& frame,
                         double angle) {
  const int d = coeffs.dim;
  Mat out = frame;
  if (d == 3) {
    const double cs = std::cos(angle), sn = std::sin(angle);
    out.col(0) = cs * frame.col(0) + sn * frame.col(1);
    out.col(1) = -sn * frame.col(0) + cs * frame.col(1);
  } else {
    // orthogonal maps of a 1D tangent space are +-1
    out.col(0) = (std::cos(angle) >= 0 ? 1.0 : -1.0) * frame.col(0);
  }
  return out;
}

namespace {

// Interface average of beta weighted exactly like the assembled surface load
// (full weight on the normal node on S, half weights on the two adjacent
// tangential rows, masked nodes contributing their no-slip zero). Pairing a
// solution against another jump's load pattern equals -b(mu)^T x, which is
// symmetric in the two jumps because the assembled saddle matrix is -- so a
// slip matrix built from this average is symmetric to solver tolerance.
// The tangential half-weights straddle S, where the conormal derivative of
// beta_c jumps by exactly jump(c); averaging across the jump leaves an
// (h/4) * jump(c) bias. Subtracting it keeps the estimate second order and
// exact for the flat wall, and since the subtraction pairs the two jump
// vectors it is itself symmetric.
Vec load_pairing(const CellSolution& sol) {
  const CellGrid& g = sol.grid;
  const int d = g.d, nlat = g.n_lat_nodes(), kS = g.kS;
  Vec p = Vec::Zero(d);
  for (int lat = 0; lat < nlat; ++lat) {
    for (int c = 0; c < d - 1; ++c)
      for (int k : {kS - 1, kS}) {
        const int idx = sol.node_index(lat, k);
        if (sol.beta_fluid[c][idx]) p(c) += 0.5 * sol.beta[c][idx];
      }
    const int idx = sol.node_index(lat, kS);
    if (sol.beta_fluid[d - 1][idx]) p(d - 1) += sol.beta[d - 1][idx];
  }
  p /= nlat;
  for (int c = 0; c < d - 1; ++c) p(c) -= 0.25 * g.h * sol.spec.jump_vector(c);
  return p;
}

}  // namespace

Mat slip_matrix(const CellCoefficients& coeffs, const RoughnessProfile& profile,
                const Mat& tangent_frame, int resolution, double depth) {
  const int d = coeffs.dim;
  const int nt = d - 1;
  std::vector<Vec> cbl(nt);
  for (int l = 0; l < nt; ++l) {
    CellProblemSpec spec;
    spec.coeffs = coeffs;
    spec.profile = profile;
    spec.jump_vector = tangent_frame.col(l);
    spec.resolution = resolution;
    spec.truncation_depth = depth;
    cbl[l] = load_pairing(solve_cell(spec));
  }
  Mat Cm(nt, nt);
  for (int l = 0; l < nt; ++l)
    for (int k = 0; k < nt; ++k) Cm(l, k) = cbl[l].dot(tangent_frame.col(k));
  return Cm;
}

namespace {

// Cut-aware, interface-side-aware gradient of component c in direction j at
// the native lateral position `lat` (component-c staggering) and pressure
// layer k. Only used by the energy quadrature.
double vertical_grad_at(const CellSolution& sol, int c, int lat, int k) {
  const CellGrid& g = sol.grid;
  const double h = g.h;
  auto val = [&](int kk) { return sol.beta[c][sol.node_index(lat, kk)]; };
  auto fluid = [&](int kk) {
    return kk >= 0 && kk < (c == g.d - 1 ? g.nv + 1 : g.nv) &&
           sol.beta_fluid[c][sol.node_index(lat, kk)];
  };
  // for tangential components the nodes sit at pressure layers; the layer
  // index doubles as the node index
  const int kS = g.kS;
  if (!fluid(k)) return 0.0;
  // a centered stencil must not straddle S (the gradient kinks there)
  const bool centered_ok =
      fluid(k + 1) && fluid(k - 1) && (k + 1 <= kS - 1 || k - 1 >= kS);
  if (k == kS - 1) {
    // last layer below S: one-sided downward, second order when possible
    if (k - 2 >= 0)
      return (3 * val(k) - 4 * val(k - 1) + val(k - 2)) / (2 * h);
    if (k - 1 >= 0) return (val(k) - val(k - 1)) / h;
    return 0.0;
  }
  if (k == kS) {
    // first layer above S: one-sided upward within the rough side
    if (fluid(k + 1) && fluid(k + 2))
      return (-3 * val(k) + 4 * val(k + 1) - val(k + 2)) / (2 * h);
    if (fluid(k + 1)) return (val(k + 1) - val(k)) / h;
    // wall immediately above: linear profile vanishing at the wall
    // (fall through to the cut slope below)
  }
  if (centered_ok) return (val(k + 1) - val(k - 1)) / (2 * h);
  if (!fluid(k + 1)) {
    // wall cut: ghost from the linear profile vanishing at gamma
    double w;
    {
      // recompute the wall height at this node's lateral position
      const int n = g.n;
      const int i0 = lat % n, i1 = lat / n;
      Vec fast(g.d - 1);
      fast(0) = (i0 + (c == 0 ? 0.0 : 0.5)) * h;
      if (g.d == 3) fast(1) = (i1 + (c == 1 ? 0.0 : 0.5)) * h;
      for (int j = 0; j < g.d - 1; ++j) fast(j) -= std::floor(fast(j));
      Vec slow = sol.spec.coeffs.base_point.size() ? sol.spec.coeffs.base_point
                                                   : Vec::Zero(g.d - 1);
      w = sol.spec.profile(slow, fast);
    }
    const double y = (c == g.d - 1) ? g.y_face(k) : g.y_center(k);
    double delta = std::max(w - y, 1e-9 * h);
    const double ghost = val(k) * (delta - h) / delta;
    if (fluid(k - 1) && k - 1 >= kS) return (ghost - val(k - 1)) / (2 * h);
    return (ghost - val(k)) / h;
  }
  if (!fluid(k - 1)) return (val(k + 1) - val(k)) / h;  // bottom layer
  return (val(k + 1) - val(k - 1)) / (2 * h);
}

}  // namespace

Mat energy_matrix(const std::vector<CellSolution>& solutions) {
  if (solutions.empty()) throw IncompatibleSolutionsError("no solutions given");
  const CellGrid& g = solutions[0].grid;
  const int d = g.d, n = g.n, nlat = g.n_lat_nodes(), nt = static_cast<int>(solutions.size());
  for (const auto& s : solutions) {
    if (s.grid.n != g.n || s.grid.nv != g.nv || s.grid.d != d ||
        (s.spec.coeffs.A - solutions[0].spec.coeffs.A).norm() > 1e-14)
      throw IncompatibleSolutionsError("energy matrix requires solutions on one grid with one coefficient set");
  }
  const Mat& A = solutions[0].spec.coeffs.A;
  const double h = g.h, hd = std::pow(h, d);

  // per-solution gradient tensor at each cell center: grad[c](j)
  auto cell_gradients = [&](const CellSolution& s, int lat, int k) {
    Mat Gr = Mat::Zero(d, d);  // Gr(c, j) = d_j beta_c
    const int i0 = lat % n, i1 = lat / n;
    for (int c = 0; c < d; ++c) {
      if (c == d - 1) {
        // d_d beta_d: native faces of the cell
        Gr(c, d - 1) = (s.beta[c][s.node_index(lat, k + 1)] -
                        s.beta[c][s.node_index(lat, k)]) / h;
        // lateral derivatives: centered at each vertical face, averaged
        for (int j = 0; j < d - 1; ++j) {
          double acc = 0;
          for (int kk : {k, k + 1}) {
            int lp, lm;
            if (j == 0) {
              lp = wrap(i0 + 1, n) + (d == 3 ? n * i1 : 0);
              lm = wrap(i0 - 1, n) + (d == 3 ? n * i1 : 0);
            } else {
              lp = i0 + n * wrap(i1 + 1, n);
              lm = i0 + n * wrap(i1 - 1, n);
            }
            acc += (s.beta[c][s.node_index(lp, kk)] -
                    s.beta[c][s.node_index(lm, kk)]) / (2 * h);
          }
          Gr(c, j) = acc / 2.0;
        }
      } else {
        // the two native c-face positions bounding this cell
        int lat_hi;
        if (c == 0)
          lat_hi = wrap(i0 + 1, n) + (d == 3 ? n * i1 : 0);
        else
          lat_hi = i0 + n * wrap(i1 + 1, n);
        // d_c beta_c: native difference across the cell
        Gr(c, c) = (s.beta[c][s.node_index(lat_hi, k)] -
                    s.beta[c][s.node_index(lat, k)]) / h;
        // vertical derivative: side-aware per face position, averaged
        Gr(c, d - 1) = 0.5 * (vertical_grad_at(s, c, lat, k) +
                              vertical_grad_at(s, c, lat_hi, k));
        // other lateral derivative (3D)
        if (d == 3) {
          const int j = 1 - c;
          double acc = 0;
          for (int lf : {lat, lat_hi}) {
            const int fi0 = lf % n, fi1 = lf / n;
            int lp, lm;
            if (j == 0) {
              lp = wrap(fi0 + 1, n) + n * fi1;
              lm = wrap(fi0 - 1, n) + n * fi1;
            } else {
              lp = fi0 + n * wrap(fi1 + 1, n);
              lm = fi0 + n * wrap(fi1 - 1, n);
            }
            acc += (s.beta[c][s.node_index(lp, k)] -
                    s.beta[c][s.node_index(lm, k)]) / (2 * h);
          }
          Gr(c, j) = acc / 2.0;
        }
      }
    }
    return Gr;
  };

  Mat E = Mat::Zero(nt, nt);
  // wall height at cell-center lateral positions, for cut weights
  std::vector<double> wall_c(nlat);
  {
    Vec slow = solutions[0].spec.coeffs.base_point.size()
                   ? solutions[0].spec.coeffs.base_point
                   : Vec::Zero(d - 1);
    for (int lat = 0; lat < nlat; ++lat) {
      Vec fast(d - 1);
      fast(0) = (lat % n + 0.5) * h;
      if (d == 3) fast(1) = (lat / n + 0.5) * h;
      for (int j = 0; j < d - 1; ++j) fast(j) -= std::floor(fast(j));
      wall_c[lat] = solutions[0].spec.profile(slow, fast);
    }
  }

  std::vector<Mat> grads(nt);
  for (int k = 0; k < g.nv; ++k) {
    for (int lat = 0; lat < nlat; ++lat) {
      const double y_bot = g.y_face(k);
      double frac = (wall_c[lat] - y_bot) / h;
      if (frac <= 0) continue;
      const bool sliver = !solutions[0].cell_fluid[k * nlat + lat];
      if (sliver) {
        // thin fluid strip above the last fluid cell: reuse its gradient
        if (k == 0) continue;
        frac = std::min(frac, 0.5);
        for (int l = 0; l < nt; ++l) grads[l] = cell_gradients(solutions[l], lat, k - 1);
      } else {
        frac = std::min(frac, 1.0);
        for (int l = 0; l < nt; ++l) grads[l] = cell_gradients(solutions[l], lat, k);
      }
      for (int l = 0; l < nt; ++l)
        for (int m = l; m < nt; ++m) {
          double acc = 0;
          for (int c = 0; c < d; ++c)
            acc += grads[l].row(c) * A * grads[m].row(c).transpose();
          E(l, m) += acc * hd * frac;
        }
    }
  }
  for (int l = 0; l < nt; ++l)
    for (int m = 0; m < l; ++m) E(l, m) = E(m, l);
  return -E;
}

// ---------------------------------------------------------------------------
// diagnostics

DecayFit decay_fit_samples(const std::vector<std::pair<double, double>>& samples) {
  DecayFit fit;
  if (samples.empty()) return fit;
  double ymin = samples.front().first;
  double floor_norm = samples.front().second;
  for (const auto& s : samples) {
    ymin = std::min(ymin, s.first);
    floor_norm = std::min(floor_norm, s.second);
  }
  // exclude the bottom buffer and the plateau where the truncation /
  // extraction error dominates the decaying signal
  const double cutoff = std::max(1e-12, 10.0 * floor_norm);
  std::vector<std::pair<double, double>> pts;  // (y, log norm)
  for (const auto& s : samples) {
    if (s.second > cutoff && s.first > ymin + 0.5 && s.first < -1e-12)
      pts.emplace_back(s.first, std::log(s.second));
  }
  if (pts.size() < 2) return fit;  // no usable decay signal
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto& p : pts) {
    sx += p.first;
    sy += p.second;
    sxx += p.first * p.first;
    sxy += p.first * p.second;
  }
  const double m = static_cast<double>(pts.size());
  const double denom = m * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) return fit;
  fit.rate = (m * sxy - sx * sy) / denom;
  const double icpt = (sy - fit.rate * sx) / m;
  double rss = 0;
  for (auto& p : pts) {
    const double r = p.second - (fit.rate * p.first + icpt);
    rss += r * r;
  }
  fit.fit_residual = std::sqrt(rss / m);
  fit.has_signal = true;
  return fit;
}

DecayFit decay_fit(const CellSolution& sol) {
  return decay_fit_samples(sol.decay_samples);
}

std::vector<std::pair<double, double>> normal_flux_profile(const CellSolution& sol) {
  const CellGrid& g = sol.grid;
  const int d = g.d, nlat = g.n_lat_nodes(), n = g.n;
  const Mat& B = sol.spec.coeffs.B;
  const double hd1 = std::pow(g.h, d - 1);

  auto lat_shift = [&](int lat, int dim, int step) {
    int i0 = lat % n, i1 = lat / n;
    if (dim == 0)
      i0 = wrap(i0 + step, n);
    else
      i1 = wrap(i1 + step, n);
    return i0 + n * i1;
  };
  auto node_val = [&](int c, int lat, int k) -> double {
    if (k < 0) k = -k - 1;  // same bottom mirror as the divergence stencil
    const int nl = (c == d - 1) ? g.nv + 1 : g.nv;
    if (k >= nl) return 0.0;
    return sol.beta[c][sol.node_index(lat, k)];
  };

  std::vector<std::pair<double, double>> out;
  for (int kf = 0; kf <= g.kS; ++kf) {
    double flux = 0.0;
    for (int lat = 0; lat < nlat; ++lat) {
      for (int c = 0; c < d; ++c) {
        if (B(c, d - 1) == 0.0) continue;
        double v;
        if (c == d - 1) {
          v = node_val(c, lat, kf);
        } else {
          v = 0.25 * (node_val(c, lat, kf - 1) + node_val(c, lat, kf) +
                      node_val(c, lat_shift(lat, c, 1), kf - 1) +
                      node_val(c, lat_shift(lat, c, 1), kf));
        }
        flux += B(c, d - 1) * v * hd1;
      }
    }
    out.emplace_back(g.y_face(kf), flux);
  }
  return out;
}

double jump_residual(const CellSolution& sol, const Vec& lambda, double plane_y) {
  const CellGrid& g = sol.grid;
  const int d = g.d, n = g.n, nlat = g.n_lat_nodes();
  const double h = g.h;
  const int kp = static_cast<int>(std::lround((plane_y + g.depth) / h));
  if (kp < 2 || kp > g.nv - 2)
    throw IncompatibleFieldsError("jump plane too close to the domain cuts");
  const Vec nu = sol.spec.coeffs.normal_vector();

  double acc = 0;
  const double wlat = std::pow(h, d - 1);
  for (int lat = 0; lat < nlat; ++lat) {
    const int i0 = lat % n, i1 = lat / n;
    Vec above(d), below(d);
    for (int c = 0; c < d; ++c) {
      if (c == d - 1) {
        above(c) = (sol.beta[c][sol.node_index(lat, kp + 1)] -
                    sol.beta[c][sol.node_index(lat, kp)]) / h;
        below(c) = (sol.beta[c][sol.node_index(lat, kp)] -
                    sol.beta[c][sol.node_index(lat, kp - 1)]) / h;
      } else {
        int latp;
        if (d == 2)
          latp = wrap(i0 + 1, n);
        else if (c == 0)
          latp = wrap(i0 + 1, n) + n * i1;
        else
          latp = i0 + n * wrap(i1 + 1, n);
        auto avg = [&](int k) {
          return 0.5 * (sol.beta[c][sol.node_index(lat, k)] +
                        sol.beta[c][sol.node_index(latp, k)]);
        };
        above(c) = (avg(kp + 1) - avg(kp)) / h;
        below(c) = (avg(kp - 1) - avg(kp - 2)) / h;
      }
    }
    const double wjump = sol.omega[sol.node_index(lat, kp)] -
                         sol.omega[sol.node_index(lat, kp - 1)];
    const Vec res = (above - below) - wjump * nu - lambda;
    acc += res.squaredNorm() * wlat;
  }
  return std::sqrt(acc);
}

CellSolution shift_solution(const CellSolution& sol, double b) {
  const CellGrid& g = sol.grid;
  const int kb = static_cast<int>(std::lround((b + g.depth) / g.h));
  if (kb <= 0 || kb >= g.kS)
    throw IncompatibleFieldsError("shift depth b must satisfy -L < b < 0");
  const double bs = g.y_face(kb);  // snapped to the nearest grid face

  CellSolution out = sol;
  const Vec& lam = sol.spec.jump_vector;
  for (int c = 0; c < g.d; ++c) {
    const int nl = (c == g.d - 1) ? g.nv + 1 : g.nv;
    for (int k = 0; k < nl; ++k) {
      const double y = (c == g.d - 1) ? g.y_face(k) : g.y_center(k);
      double add = 0;
      if (y <= bs)
        add = bs * lam(c);
      else if (y <= 0)
        add = y * lam(c);
      if (add != 0.0)
        for (int lat = 0; lat < g.n_lat_nodes(); ++lat) {
          const int idx = out.node_index(lat, k);
          if (out.beta_fluid[c][idx]) out.beta[c][idx] += add;
        }
    }
  }
  out.bl_constant = sol.bl_constant + bs * lam;
  out.decay_samples = compute_decay_samples(out);
  return out;
}

Eigen::Vector2d sample_fluctuation_2d(const CellSolution& sol, double y1, double y2) {
  const CellGrid& g = sol.grid;
  if (g.d != 2) throw IncompatibleFieldsError("sample_fluctuation_2d needs a 2D cell solution");
  const Vec& c = sol.bl_constant;
  if (y2 <= -g.depth) return Eigen::Vector2d::Zero();
  if (y2 >= g.height) return Eigen::Vector2d(-c(0), -c(1));
  const int n = g.n;
  const double h = g.h;
  const double x = y1 - std::floor(y1);  // periodic

  auto bilerp = [&](int comp) {
    // component 0: x on faces (i*h), y on centers; component 1: x on centers,
    // y on faces
    const double xs = (comp == 0) ? x / h : x / h - 0.5;
    const double ys = (comp == 0) ? (y2 + g.depth) / h - 0.5 : (y2 + g.depth) / h;
    const int i0 = static_cast<int>(std::floor(xs));
    const int k0 = static_cast<int>(std::floor(ys));
    const double fx = xs - i0, fy = ys - k0;
    const int kmax = (comp == 1) ? g.nv : g.nv - 1;
    auto at = [&](int i, int k) -> double {
      if (k < 0 || k > kmax) return 0.0;
      return sol.beta[comp][sol.node_index(wrap(i, n), k)];
    };
    return (1 - fx) * (1 - fy) * at(i0, k0) + fx * (1 - fy) * at(i0 + 1, k0) +
           (1 - fx) * fy * at(i0, k0 + 1) + fx * fy * at(i0 + 1, k0 + 1);
  };

  Eigen::Vector2d v(bilerp(0), bilerp(1));
  // below the truncation beta == c^bl up to the absorbing-cut error; the
  // fluctuation there is numerically zero
  return v - Eigen::Vector2d(c(0), c(1));
}

}  // namespace roughflow
