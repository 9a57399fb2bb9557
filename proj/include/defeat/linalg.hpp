#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <string>

namespace defeat {

using SparseMatrix = Eigen::SparseMatrix<double>;
using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int patch_id = -1)
      : std::runtime_error(what), patch_id_(patch_id) {}
  int patch_id() const { return patch_id_; }

 private:
  int patch_id_;
};

struct SolveReport {
  double relative_residual = 0.0;
  double rcond = 1.0;  // reciprocal condition estimate (dense solves)
  bool used_fallback = false;
};

/// Sparse Cholesky (LDLT); falls back to diagonally preconditioned CG.
Vector solve_spd(const SparseMatrix& a, const Vector& b, SolveReport* report = nullptr);

/// Dense LU with partial pivoting for the patch saddle systems.
Vector solve_saddle(const DenseMatrix& m, const Vector& rhs, int patch_id = -1,
                    SolveReport* report = nullptr);

}  // namespace defeat
