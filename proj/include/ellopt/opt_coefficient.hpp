#pragma once

#include <variant>
#include <vector>

#include "ellopt/convex.hpp"
#include "ellopt/energy.hpp"
#include "ellopt/grid.hpp"
#include "ellopt/linsolve.hpp"

namespace ellopt {

/// Unit-free point load: `weight` times the Dirac mass at `x0`, applied at the
/// nearest lattice node as a nodal load weight/h^2.
struct PointMass {
  Point2 x0{};
  double weight = 1.0;
};

using RhsDescriptor = std::variant<ScalarField, PointMass>;

/// Nodal load vector (interior ordering) of a right-hand side.
Vec load_vector(const GridPtr& grid, const RhsDescriptor& f);

struct CoefficientResult {
  ScalarField u_bar;
  CellField a_opt;
  /// Unsmoothed auxiliary energy at the discrete minimizer. With the boundary
  /// correction u_bar is the corrected field, not that minimizer.
  double energy = 0.0;
  double smoothed_energy = 0.0;   ///< energy of the last continuation stage
  double max_fenchel_residual = 0.0;
  std::vector<double> energy_history;  ///< accepted Newton steps, all stages
  SolveReport report;
};

struct ContinuationOptions {
  double tol = 1e-9;
  double eps_start = 1e-1;
  double eps_final = 1e-6;
  double eps_factor = 10.0;
  /// Newton tolerance for the intermediate stages.
  double stage_tol = 1e-6;
  /// After the last stage, solve_extended from the minimizer: ghost values on
  /// the masked corners put the Dirichlet condition on the true boundary.
  bool boundary_correction = true;
};

/// psi(s) = s^p/p: minimizes sum psi*(|grad u|^2 + eps^2) - 2 <f,u> with
/// continuation in eps and recovers a_opt = (psi*)'(|grad u|^2) per cell.
CoefficientResult solve_auxiliary_power(const GridPtr& grid, const RhsDescriptor& f, double p,
                                        const ContinuationOptions& options = {});

/// The smoothed conjugate of psi(s) = s on [alpha, beta]: the kink at t = 1 is
/// replaced by a quadratic on [1 - eps, 1 + eps].
Profile smoothed_two_phase_conjugate(double alpha, double beta, double eps);
/// Profile of psi*(t + eps^2) for psi = s^p/p.
Profile regularized_power_conjugate(double p, double eps);

struct TwoPhaseOptions {
  /// Newton stalls once the smoothing is far below the grid resolution of the
  /// |grad u| = 1 plateau, so the continuation stops earlier than for powers.
  /// The boundary correction is off: on the plateau its Newton iteration
  /// needs hundreds of steps.
  ContinuationOptions continuation{.eps_final = 1e-4, .boundary_correction = false};
  /// Half-width (in |grad u|) of the band around |grad u| = 1 reported as transition.
  double band = 1e-3;
};

struct TwoPhaseResult {
  CoefficientResult base;
  double band_measure = 0.0;  ///< measure of cells with ||grad u| - 1| <= band
  double beta_measure = 0.0;  ///< measure of cells where a_opt = beta
  /// Smoothed minima of the last two stages extrapolated linearly to eps = 0.
  double extrapolated_energy = 0.0;
};

TwoPhaseResult solve_two_phase(const ScalarField& f, double alpha, double beta, const TwoPhaseOptions& options = {});

struct ComplianceResult {
  double compliance = 0.0;  ///< int f u_a
  double energy = 0.0;      ///< 1/2 <A u, u> - <f, u> at the discrete solution
  ScalarField u;
  SolveReport report;
};

/// Throws SolverError if the state solve fails, std::invalid_argument if a <= 0
/// on an active cell.
ComplianceResult compliance(const CellField& a, const ScalarField& f, double tol = 1e-11);

// --- G-closure membership -------------------------------------------------

struct EigenPairCandidate {
  std::vector<double> eigenvalues;  ///< any order; sorted internally
  double alpha = 1.0;
  double beta = 2.0;
};

/// Two-dimensional closed form:
///   alpha beta / (alpha + beta - l1) <= l2 <= alpha + beta - alpha beta / l1.
bool lens_contains(double l1, double l2, double alpha, double beta);

/// Searches t in [0,1] for the d+2 lamination inequalities (any d >= 1):
/// 1025 samples per constraint followed by bisection of each monotone
/// threshold, then a direct check at the chosen t.
bool gclosure_contains_tsearch(const EigenPairCandidate& cand);

/// Membership in the G-closure; d = 2 is answered by the closed-form lens.
bool gclosure_contains(const EigenPairCandidate& cand);

}  // namespace ellopt
