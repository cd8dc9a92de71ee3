#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "ellopt/grid.hpp"
#include "ellopt/linsolve.hpp"

namespace ellopt {

using Vec = Eigen::VectorXd;

/// A scalar function with its first two derivatives.
struct Profile {
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
};

/// Discrete convex energy on the interior unknowns
///
///   E(u) = h^2 sum_cells 1/4 sum_corners phi(|g_corner|^2)
///        + h^2 sum_nodes Phi(u_i) - h^2 sum_nodes load_i u_i
///
/// with g_corner the one-sided corner gradients of grid.hpp. phi acts on
/// squared gradients; Phi is optional (empty value function means zero).
class GradientEnergy {
 public:
  GradientEnergy(GridPtr grid, Profile cell_density, Profile nodal_potential, Vec load);

  double value(const Vec& u) const;
  Vec gradient(const Vec& u) const;
  SparseMatrix hessian(const Vec& u) const;

  /// The gradient rows at the unknowns with masked corners holding their ghost
  /// values (Grid::ghost_terms) instead of zero. Its root is a discretization
  /// of the Euler-Lagrange equation whose Dirichlet condition sits on the true
  /// boundary rather than on the staircase; it is not the gradient of E.
  Vec extended_residual(const Vec& u) const;
  /// Jacobian of extended_residual (not symmetric).
  SparseMatrix extended_jacobian(const Vec& u) const;

  /// Mean over the four corners of |g|^2 per active cell, ghost values on
  /// masked corners.
  CellField extended_gradient_sq(const Vec& u) const;

  const Grid& grid() const { return *grid_; }
  const Vec& load() const { return load_; }
  std::size_t size() const { return grid_->num_interior(); }

 private:
  template <class Visit>
  void for_each_corner(const Vec& u, Visit&& visit, bool extended) const;
  Vec gradient_impl(const Vec& u, bool extended) const;
  SparseMatrix hessian_impl(const Vec& u, bool extended) const;

  GridPtr grid_;
  Profile phi_;
  Profile potential_;
  Vec load_;
};

struct NewtonOptions {
  /// Stop when ||grad E|| <= tol * gradient_scale.
  double tol = 1e-9;
  double gradient_scale = 1.0;
  std::size_t max_iterations = 200;
};

/// Damped Newton with Armijo backtracking. Energies along accepted steps never
/// increase. `energies` (optional) receives E after every accepted step.
SolveReport minimize_newton(const GradientEnergy& energy, Vec& u, const NewtonOptions& options,
                            std::vector<double>* energies = nullptr);

/// Newton's method on extended_residual with backtracking on its norm; stops
/// when ||r|| <= tol * gradient_scale.
SolveReport solve_extended(const GradientEnergy& energy, Vec& u, const NewtonOptions& options);

/// Relative error ||g - g_fd|| / ||g|| between the analytic gradient and central
/// differences with step `step`.
double gradient_check(const GradientEnergy& energy, const Vec& u, double step = 1e-6);

}  // namespace ellopt
