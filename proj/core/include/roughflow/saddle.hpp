#pragma once

// Sparse saddle-point solves shared by the cell, macro, and divergence-lab
// solvers. Three paths, one contract (relative residual <= 1e-10):
//  - direct SparseLU on the assembled indefinite system (small/medium 2D);
//  - ILU-preconditioned BiCGSTAB on the assembled system (large 2D macro
//    grids, where LU fill-in exceeds memory);
//  - pressure-Schur CG (Uzawa-style) with inner CG+IncompleteCholesky solves
//    of the SPD momentum block (3D cell problems).

#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "roughflow/errors.hpp"
#include "roughflow/geometry.hpp"

namespace roughflow {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct SparseBuilder {
  explicit SparseBuilder(int rows, int cols) : n_rows(rows), n_cols(cols) {}
  void add(int r, int c, double v) {
    if (v != 0.0) trips.emplace_back(r, c, v);
  }
  SpMat build() const {
    SpMat m(n_rows, n_cols);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
  }
  int n_rows, n_cols;
  std::vector<Triplet> trips;
};

struct SolveStats {
  double relative_residual = 0.0;
  int iterations = 0;  // 0 for direct solves
  const char* method = "";
};

// Direct solve of a general sparse system; throws SolverBreakdownError /
// ToleranceNotReachedError per the solver contract.
Vec solve_direct(const SpMat& M, const Vec& rhs, SolveStats* stats = nullptr,
                 double tol = 1e-10);

// Iterative solve of a general sparse system with an incomplete-LU
// preconditioned BiCGSTAB; same residual contract as solve_direct. Used when
// direct factorization would exceed memory.
Vec solve_ilu_bicgstab(const SpMat& M, const Vec& rhs, SolveStats* stats = nullptr,
                       double tol = 1e-10, int fill = 40, double droptol = 1e-5);

// Solve [K C^T; C 0][u;p] = [f;g] with K symmetric positive definite via CG
// on the pressure Schur complement S = C K^{-1} C^T. Returns u stacked over p.
Vec solve_schur_cg(const SpMat& K, const SpMat& C, const Vec& f, const Vec& g,
                   SolveStats* stats = nullptr, double tol = 1e-10,
                   int max_outer = 4000);

}  // namespace roughflow
