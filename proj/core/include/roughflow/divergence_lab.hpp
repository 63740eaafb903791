#pragma once

// Constructive solves of div u = f with u = 0 on the boundary, over domains
// assembled from star-shaped pieces. A mean-zero source on the union is split
// into per-piece mean-zero sources (star layout: one macro piece plus many
// disjoint micro pieces touching it; chain layout: consecutive overlaps), each
// piece gets its own divergence solve, and the sum solves the global problem.
// The point of the lab is the constant study: the measured ratio
// ||grad u||_2 / ||f||_2 stays bounded as the number of micro pieces grows
// and their size shrinks.
//
// Fields live on a shared uniform cell-centered grid; pieces are axis-aligned
// rectangles whose corners lie on the grid lattice, so piece restriction,
// overlap areas, and the splitting identities are exact in discrete
// arithmetic.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "roughflow/errors.hpp"
#include "roughflow/saddle.hpp"

namespace roughflow {

// Uniform cell-centered scalar grid.
struct LabGrid {
  double x0 = 0, y0 = 0, h = 1;
  int nx = 0, ny = 0;
  double cx(int i) const { return x0 + (i + 0.5) * h; }
  double cy(int j) const { return y0 + (j + 0.5) * h; }
  int id(int i, int j) const { return i + nx * j; }
  int cells() const { return nx * ny; }
};

struct LabField {
  LabGrid grid;
  std::vector<double> v;  // cell-centered values, zero outside the domain

  double integral() const;            // midpoint rule
  double lq_norm_q(double q) const;   // integral of |f|^q
};

struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  double diam() const;
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool contains(double x, double y) const {
    return x > x0 && x < x1 && y > y0 && y < y1;  // cell centers never sit on edges
  }
};
Rect intersect(const Rect& a, const Rect& b);

struct StarPiece {
  Rect box;
  Eigen::Vector2d star_center;  // the piece is star-shaped w.r.t. this ball
  double star_radius = 0;
};

enum class DecompositionKind { Star, Chain };

// Star layout: pieces[0] is the macro piece, pieces[1..] are pairwise
// disjoint micro pieces, each overlapping the macro piece. Chain layout:
// consecutive pieces overlap.
struct StarDecomposition {
  DecompositionKind kind = DecompositionKind::Star;
  std::vector<StarPiece> pieces;
  double shape_constant = 0;  // l: bounds diam/R and the piece/overlap area ratios
  LabGrid grid;               // shared sampling grid covering the union

  bool in_domain(double x, double y) const;
  // Star: overlap of pieces[k] (k >= 1) with the macro piece; Chain: overlap
  // of pieces[j] with pieces[j+1].
  Rect overlap(int k) const;
};

// Sampled invariant checks: star-shapedness by ray sampling, nonempty declared
// overlaps, disjoint micro pieces (star layout), shape-constant bounds, grid
// alignment of all piece corners. Throws DecompositionError.
void validate_decomposition(const StarDecomposition& decomp);

struct SplitSource {
  double q = 2;
  std::vector<LabField> pieces;  // f_k, extended by zero to the shared grid
  std::vector<double> means;     // discrete per-piece integrals (exactly ~0)
  // ||f_k||_{L^q}^q / ||f||_{L^q(G_k)}^q per piece (0 when the denominator
  // vanishes); the star bound asserts this <= cbar(q) (1 + l^{q-1}) for the
  // micro pieces.
  std::vector<double> norm_ratios;
};

// Star split: a_k = (integral of f over G_k) / |G_k ∩ G_0|; f_k equals f on
// G_k \ G_0 and f - a_k on G_k ∩ G_0 (k >= 1); f_0 = f - sum f_k. Exact
// discrete identities: sum f_k = f pointwise, per-piece means zero.
SplitSource split_source_star(const StarDecomposition& decomp, const LabField& f,
                              double q = 2);

// Chain split: recursive construction with
//   a_j = (integral of f over G_1 ∪ .. ∪ G_j) / |(G_j ∩ G_{j+1}) \ (G_1 ∪ .. ∪ G_{j-1})|,
// f_j = a_{j-1} on the incoming overlap, f in its own interior, f - a_j on the
// outgoing overlap, 0 on cells already covered by pieces before j-1.
SplitSource split_source_chain(const StarDecomposition& decomp, const LabField& f,
                               double q = 2);

// Sharp constant of the two-term power-mean inequality
// |a+b|^q <= cbar(q) (|a|^q + |b|^q): cbar(q) = 2^{q-1}.
double power_mean_constant(double q);

// div u = f_k on a rectangular piece, u = 0 on the boundary, by the minimum-
// energy construction: minimize ||grad u||^2 subject to the divergence
// constraint (a Stokes-type saddle solve on a MAC grid at the field's own
// spacing). Reports the measured constant ||grad u||_2 / ||f_k||_2.
struct DivergenceSolution {
  Rect box;
  int nx = 0, ny = 0;
  double h = 0;
  std::vector<double> u;  // (nx+1) x ny vertical faces
  std::vector<double> v;  // nx x (ny+1) horizontal faces
  std::vector<double> p;  // nx x ny multiplier field
  double grad_l2 = 0, f_l2 = 0, ratio = 0;
  double div_residual = 0;  // max |div u - f| over cells
  SolveStats stats;
};
DivergenceSolution divergence_solve(const Rect& piece, const LabField& f_k,
                                    double tol = 1e-10);

// Generator for the constant study: unit macro square plus m = floor(1/(2 eps))
// micro squares of side eps straddling its top edge, every other slot, shared
// grid spacing h = eps/8. Shape constant l = 2 sqrt(2) independent of eps.
StarDecomposition make_rough_square_decomposition(double eps);

// Uniform random values on the domain cells, shifted to exact discrete mean
// zero; zero outside.
LabField random_mean_zero_field(const StarDecomposition& decomp, std::uint64_t seed);

struct ConstantStudyRow {
  double eps = 0;
  int m = 0;                   // number of micro pieces
  double shape_constant = 0;   // l
  double global_ratio = 0;     // ||grad(sum u_k)||_2 / ||f||_2 on the union
  double macro_ratio = 0;      // measured single-piece constant of the macro square
  double envelope = 0;         // c0 (2 cbar(1 + cbar + l^{q-1}))^{1/q}, q=2, c0 = macro_ratio
  double max_norm_ratio = 0;   // max per-micro-piece split norm ratio
  double split_bound = 0;      // cbar(q)(1 + l^{q-1}) it must stay under
  double global_div_residual = 0;
};

std::vector<ConstantStudyRow> constant_study(const std::vector<double>& eps_values,
                                             std::uint64_t seed);

}  // namespace roughflow
