#pragma once

#include <vector>

#include "ellopt/convex.hpp"
#include "ellopt/energy.hpp"
#include "ellopt/grid.hpp"
#include "ellopt/linsolve.hpp"

namespace ellopt {

/// w = R(ds_j) + dz_j with R the Dirichlet resolvent of -Laplace.
ScalarField compute_w(const ScalarField& ds_j, const ScalarField& dz_j, double tol = 1e-12);
ScalarField compute_w(const Resolvent& R, const ScalarField& ds_j, const ScalarField& dz_j);

enum class MultiplierBranch { lambda_zero, lambda_positive };

struct OptimalityReport {
  ScalarField w;
  double lambda = 0.0;
  /// Root of the saturation equation; NaN when no bracket was found.
  double lambda_candidate = 0.0;
  MultiplierBranch branch = MultiplierBranch::lambda_zero;
  double max_residual = 0.0;
  /// int psi(f).
  double constraint_value = 0.0;
  /// Residuals of the two branches; the report keeps the smaller one.
  double residual_lambda_zero = 0.0;
  double residual_lambda_positive = 0.0;
};

/// Tests the multiplier alternative for a source f under int psi(f) <= m.
///
/// lambda = 0: sign conditions on w and f at the ends of dom psi.
/// lambda > 0: lambda solves int psi((psi*)'(-w/lambda)) = m (bisection in
/// log lambda); the residual is the larger of the pointwise Fenchel gap
/// psi(f) + psi*(-w/lambda) + w f / lambda and |int psi(f) - m| / m.
OptimalityReport check_source_optimality(const ScalarField& f, const ConvexFunctionSpec& psi, double m,
                                         const ScalarField& w, double tol = 1e-10);

struct BisectionStep {
  double s = 0.0;
  double volume = 0.0;
  std::size_t newton_iterations = 0;
  bool bracket_ok = true;
};

struct BangBangResult {
  ScalarField f_opt;
  ScalarField E_indicator;  ///< 1 where f_opt = beta
  ScalarField u;            ///< R(f_opt)
  double s_threshold = 0.0;
  double volume = 0.0;      ///< int f_opt
  double beta_area = 0.0;   ///< measure of {f_opt = beta}
  double perimeter = 0.0;   ///< of E_indicator
  /// Defect of the alpha set (NaN if it is empty).
  double convexity_defect = 0.0;
  /// Defect of the beta set (NaN if it is empty).
  double convexity_defect_beta_set = 0.0;
  std::vector<BisectionStep> history;
  SolveReport report;
};

struct ComplianceSourceOptions {
  double tol = 1e-10;           ///< Newton tolerance of the threshold problems
  double eps_start = 1e-2;      ///< smoothing width, relative to s
  double eps_final = 1e-4;
  double eps_factor = 10.0;
  std::size_t max_bisection = 200;
  /// Bisection stops once s_hi - s_lo <= s_resolution * s_hi.
  double s_resolution = 1e-6;
};

/// Threshold problem: for fixed s, the u solving
///   -Lap u = beta on {u < s}, alpha on {u > s}, in [alpha, beta] on {u = s}
/// minimizes the convex energy int 1/2 |grad u|^2 - G_s(u) with
/// G_s(u) = beta min(u, s) + alpha max(u - s, 0). The kink of G_s is smoothed
/// over |u - s| < eps and eps is driven to eps_final * s. A warm start
/// (`guess`) skips the continuation and solves at eps_final directly.
GradientEnergy threshold_energy(const GridPtr& grid, double alpha, double beta, double s, double eps);

struct ThresholdState {
  ScalarField u;            ///< smoothed minimizer
  ScalarField f;            ///< beta on {u <= s}, alpha elsewhere
  double volume = 0.0;      ///< int f
  SolveReport report;
};
ThresholdState solve_threshold_problem(const GridPtr& grid, double alpha, double beta, double s,
                                       const ComplianceSourceOptions& options = {}, const ScalarField* guess = nullptr);

/// Minimizes int f R(f) over alpha <= f <= beta, int f >= m. The optimal
/// source is beta on {u <= s} and alpha elsewhere; s is bisected until the
/// volume int f reaches m. The returned state is the feasible end of the
/// bracket (int f >= m).
BangBangResult solve_compliance_source(const GridPtr& grid, double alpha, double beta, double m,
                                       const ComplianceSourceOptions& options = {});

struct EigenSourceResult {
  ScalarField f;            ///< sqrt(2m) phi with phi >= 0
  ScalarField u;            ///< R(f)
  double lambda = 0.0;      ///< 1 / mu1^2
  double mu1 = 0.0;
  double objective = 0.0;   ///< 1/2 int u^2, computed
  double objective_formula = 0.0;  ///< lambda m
  SolveReport report;
};

/// Maximizes 1/2 int R(f)^2 under int f^2 <= 2m.
EigenSourceResult solve_eigen_source(const GridPtr& grid, double m, double tol = 1e-10);

}  // namespace ellopt
