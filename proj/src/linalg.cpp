#include "defeat/linalg.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <cmath>

namespace defeat {

namespace {

constexpr double kResidualTol = 1e-10;

double relative_residual(const SparseMatrix& a, const Vector& x, const Vector& b) {
  const double nb = b.norm();
  const double r = (a * x - b).norm();
  return nb > 0.0 ? r / nb : r;
}

}  // namespace

Vector solve_spd(const SparseMatrix& a, const Vector& b, SolveReport* report) {
  if (a.rows() != a.cols() || a.rows() != b.size())
    throw SolverError("solve_spd: dimension mismatch");
  if (a.rows() == 0) return Vector();
  SolveReport rep;
  Vector x;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
  bool ok = ldlt.info() == Eigen::Success;
  if (ok) {
    ok = (ldlt.vectorD().array() > 0.0).all();
    if (ok) {
      x = ldlt.solve(b);
      ok = x.allFinite() && relative_residual(a, x, b) <= kResidualTol;
    }
  }
  if (!ok) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-13);
    cg.setMaxIterations(static_cast<Eigen::Index>(10 * a.rows() + 100));
    cg.compute(a);
    x = cg.solve(b);
    rep.used_fallback = true;
    if (!x.allFinite())
      throw SolverError("solve_spd: matrix is singular or not positive definite");
  }
  rep.relative_residual = relative_residual(a, x, b);
  if (report) *report = rep;
  if (!(rep.relative_residual <= kResidualTol)) {
    const double dmin = a.diagonal().minCoeff();
    const double dmax = a.diagonal().maxCoeff();
    throw SolverError("solve_spd: residual " + std::to_string(rep.relative_residual) +
                      " above tolerance (diagonal range " + std::to_string(dmin) + " .. " +
                      std::to_string(dmax) + ")");
  }
  return x;
}

Vector solve_saddle(const DenseMatrix& m, const Vector& rhs, int patch_id, SolveReport* report) {
  if (m.rows() != m.cols() || m.rows() != rhs.size())
    throw SolverError("solve_saddle: dimension mismatch", patch_id);
  if (m.rows() == 0) return Vector();
  const std::string where = patch_id >= 0 ? " (patch " + std::to_string(patch_id) + ")" : "";
  if (!m.allFinite()) throw SolverError("solve_saddle: non-finite matrix" + where, patch_id);
  // Symmetric equilibration (Ruiz iteration): patch blocks scale with
  // different powers of the element size, so conditioning is judged on D m D
  // where every row of D m D has max-norm close to one.
  Vector d = Vector::Ones(m.rows());
  DenseMatrix a = m;
  for (int sweep = 0; sweep < 40; ++sweep) {
    Vector r(m.rows());
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double rmax = a.row(i).cwiseAbs().maxCoeff();
      if (!(rmax > 0.0)) throw SolverError("solve_saddle: zero row" + where, patch_id);
      r[i] = 1.0 / std::sqrt(rmax);
      worst = std::max(worst, std::abs(1.0 - rmax));
    }
    if (worst < 1e-2) break;
    a = r.asDiagonal() * a * r.asDiagonal();
    d = d.cwiseProduct(r);
  }
  const Vector b = d.cwiseProduct(rhs);
  Eigen::PartialPivLU<DenseMatrix> lu(a);
  SolveReport rep;
  rep.rcond = lu.rcond();
  if (!(rep.rcond > 1e-15)) throw SolverError("solve_saddle: singular system" + where, patch_id);
  Vector y = lu.solve(b);
  // one step of iterative refinement keeps the backward error tight
  y += lu.solve(b - a * y);
  const double scale = std::max(b.norm(), a.norm() * y.norm());
  rep.relative_residual = scale > 0.0 ? (a * y - b).norm() / scale : 0.0;
  if (report) *report = rep;
  const Vector x = d.cwiseProduct(y);
  if (!x.allFinite() || !(rep.relative_residual <= 1e-8))
    throw SolverError("solve_saddle: inaccurate solve" + where + ", rcond " +
                      std::to_string(rep.rcond),
                      patch_id);
  return x;
}

}  // namespace defeat
