#include "roughflow/saddle.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

namespace roughflow {

Vec solve_direct(const SpMat& M, const Vec& rhs, SolveStats* stats, double tol) {
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(M);
  lu.factorize(M);
  if (lu.info() != Eigen::Success)
    throw SolverBreakdownError("sparse LU factorization failed (singular saddle system?)");
  Vec x = lu.solve(rhs);
  if (lu.info() != Eigen::Success)
    throw SolverBreakdownError("sparse LU back-substitution failed");

  // one step of iterative refinement, then enforce the residual contract
  Vec r = rhs - M * x;
  x += lu.solve(r);
  r = rhs - M * x;
  const double rel = rhs.norm() > 0 ? r.norm() / rhs.norm() : r.norm();
  if (stats) {
    stats->relative_residual = rel;
    stats->iterations = 0;
    stats->method = "sparse-lu";
  }
  if (rel > tol)
    throw ToleranceNotReachedError("direct solve residual above tolerance", rel);
  return x;
}

Vec solve_ilu_bicgstab(const SpMat& M, const Vec& rhs, SolveStats* stats,
                       double tol, int fill, double droptol) {
  Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> solver;
  solver.preconditioner().setFillfactor(fill);
  solver.preconditioner().setDroptol(droptol);
  solver.setTolerance(tol * 0.1);
  solver.setMaxIterations(20000);
  solver.compute(M);
  if (solver.info() != Eigen::Success)
    throw SolverBreakdownError("incomplete LU setup failed");
  Vec x = solver.solve(rhs);
  Vec r = rhs - M * x;
  // restarted refinement passes when the Krylov solve stalls short of the
  // contract (BiCGSTAB restarts recover from breakdowns of the recurrence)
  const double rhs_norm = std::max(rhs.norm(), 1e-300);
  for (int pass = 0; pass < 6 && r.norm() / rhs_norm > tol; ++pass) {
    x += solver.solve(r);
    r = rhs - M * x;
  }
  const double rel = r.norm() / rhs_norm;
  if (stats) {
    stats->relative_residual = rel;
    stats->iterations = static_cast<int>(solver.iterations());
    stats->method = "ilu-bicgstab";
  }
  if (rel > tol)
    throw ToleranceNotReachedError("iterative solve residual above tolerance", rel);
  return x;
}

Vec solve_schur_cg(const SpMat& K, const SpMat& C, const Vec& f, const Vec& g,
                   SolveStats* stats, double tol, int max_outer) {
  using InnerSolver =
      Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                               Eigen::IncompleteCholesky<double>>;
  InnerSolver inner;
  inner.setTolerance(1e-12);
  inner.setMaxIterations(20000);
  inner.compute(K);
  if (inner.info() != Eigen::Success)
    throw SolverBreakdownError("incomplete Cholesky setup failed on the momentum block");

  auto ksolve = [&](const Vec& b) -> Vec {
    Vec x = inner.solve(b);
    if (inner.info() != Eigen::Success && inner.error() > 1e-10)
      throw ToleranceNotReachedError("inner momentum solve stalled", inner.error());
    return x;
  };

  const SpMat Ct = SpMat(C.transpose());
  Vec u0 = ksolve(f);
  Vec b = C * u0 - g;  // Schur right-hand side

  // plain CG on S = C K^{-1} C^T (SPD when C has full row rank)
  const int np = static_cast<int>(C.rows());
  Vec p = Vec::Zero(np);
  Vec r = b;
  Vec d = r;
  double rr = r.squaredNorm();
  // the Schur residual r equals the divergence block of the full residual, so
  // stop against the full-system right-hand side (the actual contract)
  const double rhs_scale =
      std::max(std::sqrt(f.squaredNorm() + g.squaredNorm()), 1e-300);
  int it = 0;
  for (; it < max_outer; ++it) {
    if (std::sqrt(rr) / rhs_scale < tol * 0.5) break;
    Vec Sd = C * ksolve(Ct * d);
    const double dSd = d.dot(Sd);
    if (!(dSd > 0))
      throw SolverBreakdownError("Schur complement lost positive definiteness");
    const double alpha = rr / dSd;
    p += alpha * d;
    r -= alpha * Sd;
    const double rr_new = r.squaredNorm();
    d = r + (rr_new / rr) * d;
    rr = rr_new;
  }

  Vec u = ksolve(f - Ct * p);

  // verify the full-system contract
  const Vec res_mom = K * u + Ct * p - f;
  const Vec res_div = C * u - g;
  const double rhs_norm = std::max(std::sqrt(f.squaredNorm() + g.squaredNorm()), 1e-300);
  const double rel = std::sqrt(res_mom.squaredNorm() + res_div.squaredNorm()) / rhs_norm;
  if (stats) {
    stats->relative_residual = rel;
    stats->iterations = it;
    stats->method = "schur-cg";
  }
  if (rel > tol)
    throw ToleranceNotReachedError("pressure-Schur CG did not meet tolerance", rel);

  Vec x(K.rows() + np);
  x.head(K.rows()) = u;
  x.tail(np) = p;
  return x;
}

}  // namespace roughflow
