#pragma once

#include <optional>
#include <vector>

#include "ellopt/convex.hpp"
#include "ellopt/energy.hpp"
#include "ellopt/grid.hpp"
#include "ellopt/linsolve.hpp"

namespace ellopt {

struct PotentialResult {
  ScalarField u_bar;
  ScalarField V_opt;
  std::optional<ScalarField> v_adj;
  double cost = 0.0;
  SolveReport report;
};

struct CompliancePotentialResult {
  PotentialResult base;
  /// min of int |grad u|^2 + psi*(u^2) - 2 f u.
  double aux_objective = 0.0;
  /// int f u + int psi(V_opt); equals -aux_objective at the optimum.
  double coupled_cost = 0.0;
  /// ||u_V - u_bar|| / ||u_bar|| with u_V the linear solve for V = V_opt.
  double self_consistency = 0.0;
  double max_V = 0.0;
};

/// Nonlinearity g(s) = s (psi*)'(s^2) of the eliminated state equation.
double semilinear_g(const ConvexFunctionSpec& psi, double s);
double semilinear_g_prime(const ConvexFunctionSpec& psi, double s);

/// int |grad u|^2 + psi*(u^2) - 2 f u, discretized.
GradientEnergy compliance_potential_energy(const ScalarField& f, const ConvexFunctionSpec& psi);

/// Minimizes the eliminated energy by damped Newton on -Lap u + g(u) = f and
/// recovers V_opt = (psi*)'(u^2). psi must be PowerOverP or Quadratic.
CompliancePotentialResult solve_compliance_potential(const ScalarField& f, const ConvexFunctionSpec& psi,
                                                     double tol = 1e-10);

/// -Lap v + V v = rhs.
ScalarField solve_adjoint(const ScalarField& V, const ScalarField& rhs, double tol = 1e-11);

struct PotentialOptimalityReport {
  double max_fenchel_residual = 0.0;  ///< of the pair (V, u v)
  double max_h_violation = 0.0;       ///< of h_-(u v) <= V <= h(u v)
};

PotentialOptimalityReport check_optimality_potential(const ScalarField& u, const ScalarField& v,
                                                     const ScalarField& V, const ConvexFunctionSpec& psi);

struct BangBangPotentialOptions {
  double tol = 1e-11;               ///< linear solves
  std::size_t max_iterations = 300;
};

struct BangBangPotentialResult {
  PotentialResult base;  ///< cost = int (u + k V)
  double cost_at_alpha = 0.0;
  double cost_at_beta = 0.0;
  double perimeter = 0.0;            ///< of {V = beta}
  double beta_area = 0.0;
  double transition_fraction = 0.0; ///< |{alpha < V < beta}| / |Omega_h|
  std::vector<double> cost_history;
};

/// j(x,s) = s with psi = k s on [alpha, beta]. Iterates state and adjoint
/// solves, switching V to beta on {u v > k} and alpha elsewhere (ties go to
/// alpha). A switch is accepted only if it lowers the cost; otherwise the set
/// of switched nodes is halved, keeping those with the largest |u v - k|.
BangBangPotentialResult solve_bangbang_potential(const ScalarField& f, double alpha, double beta, double k,
                                                 const BangBangPotentialOptions& options = {});

}  // namespace ellopt
