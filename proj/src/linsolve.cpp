#include "ellopt/linsolve.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ellopt {

using Vec = Eigen::VectorXd;

namespace {

Vec to_vec(const ScalarField& f) {
  const auto d = f.dofs();
  return Eigen::Map<const Vec>(d.data(), static_cast<Eigen::Index>(d.size()));
}

ScalarField to_field(const GridPtr& grid, const Vec& x) {
  return ScalarField::from_dofs(grid, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

double harmonic_mean(double a, double b) { return (a + b > 0.0) ? 2.0 * a * b / (a + b) : 0.0; }

// Edge weights: wx(i,j) couples (i,j)-(i+1,j); wy(i,j) couples (i,j)-(i,j+1).
SparseMatrix assemble_edges(const Grid& g, const std::function<double(std::size_t, std::size_t)>& wx,
                            const std::function<double(std::size_t, std::size_t)>& wy,
                            std::span<const double> diagonal) {
  const double inv_h2 = 1.0 / (g.h() * g.h());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(g.num_interior() * 5);
  for (std::size_t n : g.interior_nodes()) {
    const std::size_t i = g.node_i(n);
    const std::size_t j = g.node_j(n);
    const long row = g.dof(n);
    double diag = diagonal.empty() ? 0.0 : diagonal[static_cast<std::size_t>(row)];
    auto couple = [&](std::size_t m, double w) {
      diag += w * inv_h2;
      if (g.is_interior(m) && w != 0.0) trip.emplace_back(row, g.dof(m), -w * inv_h2);
    };
    couple(g.node(i + 1, j), wx(i, j));
    couple(g.node(i - 1, j), wx(i - 1, j));
    couple(g.node(i, j + 1), wy(i, j));
    couple(g.node(i, j - 1), wy(i, j - 1));
    trip.emplace_back(row, row, diag);
  }
  const auto N = static_cast<Eigen::Index>(g.num_interior());
  SparseMatrix A(N, N);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

SolveReport conjugate_gradients(const SparseMatrix& A, const Vec& b, Vec& x, const SolveOptions& opt) {
  SolveReport rep;
  const std::size_t cap = opt.max_iterations ? opt.max_iterations : 10 * static_cast<std::size_t>(b.size());
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    rep.converged = true;
    return rep;
  }
  Vec inv_diag = Vec::Ones(b.size());
  if (opt.method == SolveMethod::jacobi_pcg) inv_diag = A.diagonal().cwiseInverse();

  Vec r = b - A * x;
  Vec z = inv_diag.cwiseProduct(r);
  Vec p = z;
  double rz = r.dot(z);
  double rel = r.norm() / bnorm;
  std::size_t it = 0;
  while (rel > opt.tol && it < cap) {
    const Vec Ap = A * p;
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) {
      rep.message = "operator is not positive definite";
      break;
    }
    const double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    ++it;
    // Recompute the true residual now and then to avoid drift.
    if (it % 200 == 0) r = b - A * x;
    rel = r.norm() / bnorm;
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  rel = (b - A * x).norm() / bnorm;
  rep.iterations = it;
  rep.final_residual = rel;
  rep.converged = rel <= opt.tol;
  if (!rep.converged && rep.message.empty()) rep.message = "CG reached the iteration cap";
  return rep;
}

}  // namespace

LinearOperator::LinearOperator(GridPtr grid, SparseMatrix matrix) : grid_(std::move(grid)), matrix_(std::move(matrix)) {
  if (static_cast<std::size_t>(matrix_.rows()) != grid_->num_interior() || matrix_.rows() != matrix_.cols()) {
    throw std::invalid_argument("LinearOperator: matrix does not match the grid");
  }
}

ScalarField LinearOperator::apply(const ScalarField& u) const { return to_field(grid_, matrix_ * to_vec(u)); }

LinearOperator assemble_diffusion(const CellField& a) {
  const Grid& g = a.grid();
  for (std::size_t c : g.active_cells()) {
    if (!(a[c] >= 0.0) || !std::isfinite(a[c])) {
      throw std::invalid_argument("assemble_diffusion: coefficient must be finite and >= 0 (cell " +
                                  std::to_string(c) + ")");
    }
  }
  auto cell_value = [&](std::size_t i, std::size_t j) { return a[g.cell(i, j)]; };
  auto wx = [&](std::size_t i, std::size_t j) { return harmonic_mean(cell_value(i, j - 1), cell_value(i, j)); };
  auto wy = [&](std::size_t i, std::size_t j) { return harmonic_mean(cell_value(i - 1, j), cell_value(i, j)); };
  return LinearOperator(a.grid_ptr(), assemble_edges(g, wx, wy, {}));
}

LinearOperator assemble_laplacian(const GridPtr& grid) {
  auto one = [](std::size_t, std::size_t) { return 1.0; };
  return LinearOperator(grid, assemble_edges(*grid, one, one, {}));
}

LinearOperator assemble_schrodinger(const ScalarField& V) {
  const Grid& g = V.grid();
  const auto diag = V.dofs();
  for (double v : diag) {
    if (!(v >= 0.0)) throw std::invalid_argument("assemble_schrodinger: potential must be >= 0");
  }
  auto one = [](std::size_t, std::size_t) { return 1.0; };
  return LinearOperator(V.grid_ptr(), assemble_edges(g, one, one, diag));
}

// --- Resolvent ------------------------------------------------------------

struct Resolvent::Factor {
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
};

Resolvent::Resolvent(LinearOperator A, SolveOptions options) : op_(std::move(A)), options_(options) {
  if (options_.method == SolveMethod::cholesky) {
    factor_ = std::make_shared<Factor>();
    factor_->llt.compute(Eigen::SparseMatrix<double>(op_.matrix()));
    for (Eigen::Index i = 0; i < op_.matrix().outerSize(); ++i) {
      double row = 0.0;
      for (SparseMatrix::InnerIterator it(op_.matrix(), i); it; ++it) row += std::abs(it.value());
      norm_inf_ = std::max(norm_inf_, row);
    }
  }
}

SolveOutcome Resolvent::solve(const ScalarField& f, const ScalarField* guess) const {
  if (&f.grid() != &op_.grid()) throw std::invalid_argument("solve: right-hand side lives on another grid");
  const Vec b = to_vec(f);
  SolveOutcome out;
  Vec x;
  if (options_.method == SolveMethod::cholesky) {
    if (factor_->llt.info() != Eigen::Success) {
      out.report.message = "Cholesky factorization failed (operator not positive definite)";
      return out;
    }
    x = factor_->llt.solve(b);
    const double bnorm = b.norm();
    Vec r = b - op_.matrix() * x;
    out.report.iterations = 1;
    // Iterative refinement; stops once the residual no longer shrinks.
    for (int k = 0; k < 3 && bnorm > 0.0 && r.norm() > options_.tol * bnorm; ++k) {
      const Vec x1 = x + factor_->llt.solve(r);
      const Vec r1 = b - op_.matrix() * x1;
      if (!(r1.norm() < r.norm())) break;
      x = x1;
      r = r1;
      ++out.report.iterations;
    }
    out.report.final_residual = bnorm > 0.0 ? r.norm() / bnorm : 0.0;
    // A tolerance below the rounding floor eps * ||A|| ||x|| / ||b|| is met by
    // any backward-stable solve.
    const double floor = bnorm > 0.0 ? 64.0 * std::numeric_limits<double>::epsilon() * norm_inf_ *
                                           x.lpNorm<Eigen::Infinity>() * std::sqrt(static_cast<double>(b.size())) / bnorm
                                     : 0.0;
    out.report.converged = out.report.final_residual <= std::max(options_.tol, floor);
    if (!out.report.converged) out.report.message = "direct solve residual above tolerance";
  } else {
    x = guess ? to_vec(*guess) : Vec::Zero(b.size());
    out.report = conjugate_gradients(op_.matrix(), b, x, options_);
  }
  if (out.report.converged) out.u = to_field(op_.grid_ptr(), x);
  return out;
}

ScalarField Resolvent::apply(const ScalarField& f) const {
  auto out = solve(f);
  if (!out.u) throw SolverError("linear solve failed: " + out.report.message);
  return std::move(*out.u);
}

SolveOutcome solve(const LinearOperator& A, const ScalarField& f, const SolveOptions& options) {
  return Resolvent(A, options).solve(f);
}

// --- Eigenpair ------------------------------------------------------------

EigenResult smallest_eigenpair(const LinearOperator& A, double tol, std::size_t max_iterations) {
  const GridPtr& grid = A.grid_ptr();
  // Inner solves must be far more accurate than the eigen residual target.
  Resolvent R(A, {.tol = std::min(1e-12, 1e-3 * tol), .method = SolveMethod::cholesky});
  const SparseMatrix& M = A.matrix();
  const double h2 = grid->h() * grid->h();

  Vec x = Vec::Ones(static_cast<Eigen::Index>(grid->num_interior()));
  x /= std::sqrt(h2 * x.squaredNorm());
  double mu = 0.0;
  double residual = INFINITY;
  std::size_t it = 0;
  while (it < max_iterations) {
    auto step = R.solve(to_field(grid, x));
    if (!step.u) throw SolverError("smallest_eigenpair: inner solve failed: " + step.report.message);
    Vec y = to_vec(*step.u);
    y /= std::sqrt(h2 * y.squaredNorm());
    ++it;
    const Vec Ay = M * y;
    mu = y.dot(Ay) / y.squaredNorm();
    residual = (Ay - mu * y).norm() / (mu * y.norm());
    x = std::move(y);
    if (residual <= tol) break;
  }
  if (x.sum() < 0.0) x = -x;
  x = x.cwiseMax(0.0);
  x /= std::sqrt(h2 * x.squaredNorm());

  EigenResult out{mu, to_field(grid, x), {}};
  out.report.iterations = it;
  out.report.final_residual = residual;
  out.report.objective = mu;
  out.report.converged = residual <= tol;
  if (!out.report.converged) {
    throw SolverError("smallest_eigenpair: no convergence after " + std::to_string(it) + " iterations (residual " +
                      std::to_string(residual) + ")");
  }
  return out;
}

EigenResult smallest_eigenpair(const GridPtr& grid, double tol, std::size_t max_iterations) {
  return smallest_eigenpair(assemble_laplacian(grid), tol, max_iterations);
}

}  // namespace ellopt
