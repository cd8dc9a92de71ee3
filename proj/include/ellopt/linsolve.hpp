#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <optional>
#include <string>

#include "ellopt/grid.hpp"

namespace ellopt {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct SolveReport {
  std::size_t iterations = 0;
  double final_residual = 0.0;  ///< relative 2-norm
  double objective = 0.0;       ///< meaning depends on the solver
  bool converged = false;
  std::string message;
};

/// Symmetric operator on the interior nodes of a grid, scaled as the strong
/// form (a 5-point Laplacian row reads (-1,-1,4,-1,-1)/h^2).
class LinearOperator {
 public:
  LinearOperator(GridPtr grid, SparseMatrix matrix);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const SparseMatrix& matrix() const { return matrix_; }
  ScalarField apply(const ScalarField& u) const;

 private:
  GridPtr grid_;
  SparseMatrix matrix_;
};

/// -div(a grad u); a is given per cell and each edge uses the harmonic mean of
/// the two cells sharing it. Throws std::invalid_argument on negative a.
LinearOperator assemble_diffusion(const CellField& a);
LinearOperator assemble_laplacian(const GridPtr& grid);
/// -Laplace(u) + V u. Throws std::invalid_argument on negative V.
LinearOperator assemble_schrodinger(const ScalarField& V);

enum class SolveMethod {
  cg,             ///< plain conjugate gradients
  jacobi_pcg,     ///< CG with diagonal preconditioning
  cholesky,       ///< sparse Cholesky; the factor is reused by Resolvent
};

struct SolveOptions {
  double tol = 1e-10;
  SolveMethod method = SolveMethod::cg;
  /// 0 means 10 * number of unknowns.
  std::size_t max_iterations = 0;
};

struct SolveOutcome {
  std::optional<ScalarField> u;  ///< empty when the solve failed
  SolveReport report;
};

/// Solves A u = f to relative residual tol.
SolveOutcome solve(const LinearOperator& A, const ScalarField& f, const SolveOptions& options = {});

/// Repeated solves with one operator. With SolveMethod::cholesky the factor is
/// computed once; iterative methods warm-start from `guess` when given.
class Resolvent {
 public:
  explicit Resolvent(LinearOperator A, SolveOptions options = {});

  SolveOutcome solve(const ScalarField& f, const ScalarField* guess = nullptr) const;
  /// Like solve() but throws SolverError on failure.
  ScalarField apply(const ScalarField& f) const;
  const LinearOperator& op() const { return op_; }

 private:
  struct Factor;
  LinearOperator op_;
  SolveOptions options_;
  std::shared_ptr<Factor> factor_;
  double norm_inf_ = 0.0;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EigenResult {
  double mu = 0.0;          ///< smallest eigenvalue
  ScalarField phi;          ///< nonnegative, unit discrete L2 norm
  SolveReport report;
};

/// Inverse power iteration for the smallest eigenpair of A. Stops when
/// ||A phi - mu phi|| <= tol * mu ||phi||. Throws SolverError on the cap.
EigenResult smallest_eigenpair(const LinearOperator& A, double tol, std::size_t max_iterations = 500);
/// Dirichlet Laplacian of the grid.
EigenResult smallest_eigenpair(const GridPtr& grid, double tol, std::size_t max_iterations = 500);

}  // namespace ellopt
