#include "ellopt/opt_coefficient.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace ellopt {

namespace {

Vec field_dofs(const ScalarField& f) {
  const auto d = f.dofs();
  return Eigen::Map<const Vec>(d.data(), static_cast<Eigen::Index>(d.size()));
}

ScalarField as_field(const GridPtr& grid, const Vec& u) {
  return ScalarField::from_dofs(grid, std::span<const double>(u.data(), u.size()));
}

// Minimizes c -> E(c w) for a convex energy by bisection on its derivative.
double best_scaling(const GradientEnergy& energy, const Vec& w) {
  auto slope = [&](double c) { return energy.gradient(c * w).dot(w); };
  double lo = 0.0;
  double hi = 1.0;
  if (slope(0.0) >= 0.0) return 0.0;
  int guard = 0;
  while (slope(hi) < 0.0 && guard++ < 200) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Unsmoothed h^2 sum_cells 1/4 sum_corners psi*(|g|^2) - h^2 <load, u>.
double conjugate_energy(const ConvexFunctionSpec& psi, const ScalarField& u, const Vec& load) {
  const Grid& g = u.grid();
  double acc = 0.0;
  for (std::size_t c : g.active_cells()) {
    for (const auto& gr : corner_gradients(u, c)) acc += 0.25 * conjugate(psi, gr[0] * gr[0] + gr[1] * gr[1]);
  }
  return g.h() * g.h() * (acc - load.dot(field_dofs(u)));
}

struct StageOutcome {
  SolveReport report;
  double last_energy = 0.0;
  std::vector<double> stage_energies;    ///< smoothed minimum per eps stage
  std::optional<CellField> gradient_sq;  ///< mean corner |grad u|^2 per cell
  Vec minimizer;                         ///< last stage, before the boundary correction
};

// Runs the eps-continuation; `make_profile(eps)` gives the cell density.
StageOutcome continuation(const GridPtr& grid, const std::function<Profile(double)>& make_profile, const Vec& load,
                          Vec& u, const ContinuationOptions& opt, std::vector<double>& history) {
  const double h2 = grid->h() * grid->h();
  const double scale = h2 * load.norm();
  StageOutcome out;
  std::size_t total = 0;
  double eps = opt.eps_start;
  while (true) {
    const bool last = eps <= opt.eps_final * (1.0 + 1e-12);
    if (last) eps = opt.eps_final;
    GradientEnergy energy(grid, make_profile(eps), Profile{}, load);
    NewtonOptions nopt{.tol = last ? opt.tol : std::max(opt.tol, opt.stage_tol), .gradient_scale = scale};
    SolveReport rep = minimize_newton(energy, u, nopt, &history);
    total += rep.iterations;
    out.last_energy = rep.objective;
    out.stage_energies.push_back(rep.objective);
    if (!rep.converged) {
      std::ostringstream msg;
      msg << "continuation stall at eps=" << eps << ": " << rep.message;
      rep.message = msg.str();
      rep.iterations = total;
      out.report = rep;
      return out;
    }
    if (last) {
      out.minimizer = u;
      if (opt.boundary_correction) {
        SolveReport fix = solve_extended(energy, u, nopt);
        rep.converged = fix.converged;
        rep.final_residual = fix.final_residual;
        if (!fix.converged) rep.message = "boundary correction: " + fix.message;
        total += fix.iterations;
        out.gradient_sq = energy.extended_gradient_sq(u);
      } else {
        out.gradient_sq = cell_gradient_sq(ScalarField::from_dofs(grid, std::span<const double>(u.data(), u.size())));
      }
      rep.iterations = total;
      out.report = rep;
      return out;
    }
    eps /= opt.eps_factor;
  }
}

}  // namespace

Vec load_vector(const GridPtr& grid, const RhsDescriptor& f) {
  if (const auto* field = std::get_if<ScalarField>(&f)) {
    if (&field->grid() != grid.get()) throw std::invalid_argument("rhs lives on another grid");
    return field_dofs(*field);
  }
  const auto& pm = std::get<PointMass>(f);
  const std::size_t n = grid->nearest_node(pm.x0);
  if (!grid->is_interior(n)) throw std::invalid_argument("point mass must sit at an interior node");
  Vec load = Vec::Zero(static_cast<Eigen::Index>(grid->num_interior()));
  load[grid->dof(n)] = pm.weight / (grid->h() * grid->h());
  return load;
}

Profile regularized_power_conjugate(double p, double eps) {
  const double q = p / (p - 1.0);
  const double e2 = eps * eps;
  return Profile{
      [q, e2](double t) { return std::pow(t + e2, q) / q; },
      [q, e2](double t) { return std::pow(t + e2, q - 1.0); },
      [q, e2](double t) { return (q - 1.0) * std::pow(t + e2, q - 2.0); },
  };
}

Profile smoothed_two_phase_conjugate(double alpha, double beta, double eps) {
  const double jump = beta - alpha;
  return Profile{
      [=](double t) {
        const double d = t - 1.0;
        if (d <= -eps) return alpha * d;
        if (d >= eps) return beta * d;
        return alpha * d + jump * (d + eps) * (d + eps) / (4.0 * eps);
      },
      [=](double t) {
        const double d = t - 1.0;
        if (d <= -eps) return alpha;
        if (d >= eps) return beta;
        return alpha + jump * (d + eps) / (2.0 * eps);
      },
      [=](double t) {
        const double d = t - 1.0;
        return (d > -eps && d < eps) ? jump / (2.0 * eps) : 0.0;
      },
  };
}

CoefficientResult solve_auxiliary_power(const GridPtr& grid, const RhsDescriptor& f, double p,
                                        const ContinuationOptions& options) {
  const ConvexFunctionSpec psi = PowerOverP{p};
  validate(psi);
  const Vec load = 2.0 * load_vector(grid, f);
  CoefficientResult res{ScalarField(grid), CellField(grid), 0.0, 0.0, 0.0, {}, {}};
  if (load.norm() == 0.0) {
    res.report.converged = true;
    res.report.message = "zero load";
    return res;
  }

  // Start from the best multiple of the Poisson solution.
  Resolvent laplace(assemble_laplacian(grid), {.tol = 1e-10, .method = SolveMethod::cholesky});
  const Vec w = field_dofs(laplace.apply(ScalarField::from_dofs(grid, std::span<const double>(load.data(), load.size()))));
  Vec u = best_scaling(GradientEnergy(grid, regularized_power_conjugate(p, options.eps_start), Profile{}, load), w) * w;

  auto outcome = continuation(
      grid, [p](double eps) { return regularized_power_conjugate(p, eps); }, load, u, options, res.energy_history);
  res.report = outcome.report;
  res.smoothed_energy = outcome.last_energy;
  res.u_bar = ScalarField::from_dofs(grid, std::span<const double>(u.data(), u.size()));
  res.energy = conjugate_energy(psi, as_field(grid, outcome.minimizer), load);
  res.report.objective = res.energy;

  const CellField t = outcome.gradient_sq ? *outcome.gradient_sq : cell_gradient_sq(res.u_bar);
  for (std::size_t c : grid->active_cells()) {
    const double a = conjugate_derivative(psi, t[c]);
    res.a_opt[c] = a;
    res.max_fenchel_residual = std::max(res.max_fenchel_residual, fenchel_residual(psi, a, t[c]));
  }
  return res;
}

TwoPhaseResult solve_two_phase(const ScalarField& f, double alpha, double beta, const TwoPhaseOptions& options) {
  if (!(alpha > 0.0) || !(alpha < beta)) throw std::invalid_argument("two-phase: require 0 < alpha < beta");
  const GridPtr& grid = f.grid_ptr();
  const ConvexFunctionSpec psi = LinearOnInterval{alpha, beta, 1.0};
  const Vec load = 2.0 * field_dofs(f);
  TwoPhaseResult out{{ScalarField(grid), CellField(grid, alpha), 0.0, 0.0, 0.0, {}, {}}, 0.0, 0.0, 0.0};
  CoefficientResult& res = out.base;

  Vec u = Vec::Zero(load.size());
  Vec minimizer = u;
  std::optional<CellField> gradient_sq;
  if (load.norm() == 0.0) {
    res.report.converged = true;
    res.report.message = "zero load";
  } else {
    // Pure alpha-phase solution as the initial guess.
    Resolvent laplace(assemble_laplacian(grid), {.tol = 1e-10, .method = SolveMethod::cholesky});
    u = field_dofs(laplace.apply(f)) / alpha;
    auto outcome = continuation(
        grid, [=](double eps) { return smoothed_two_phase_conjugate(alpha, beta, eps); }, load, u,
        options.continuation, res.energy_history);
    res.report = outcome.report;
    res.smoothed_energy = outcome.last_energy;
    gradient_sq = std::move(outcome.gradient_sq);
    minimizer = std::move(outcome.minimizer);
    const auto& st = outcome.stage_energies;
    const double q = options.continuation.eps_factor;
    out.extrapolated_energy = st.size() >= 2 ? (q * st.back() - st[st.size() - 2]) / (q - 1.0) : st.back();
  }
  res.u_bar = ScalarField::from_dofs(grid, std::span<const double>(u.data(), u.size()));
  res.energy = conjugate_energy(psi, as_field(grid, minimizer), load);
  res.report.objective = res.energy;

  // The Fenchel residual a(1 - t) + psi*(t) is affine in a, so its minimizer
  // over [alpha, beta] is beta for t > 1 and alpha otherwise.
  const CellField t = gradient_sq ? *gradient_sq : cell_gradient_sq(res.u_bar);
  const double h2 = grid->h() * grid->h();
  for (std::size_t c : grid->active_cells()) {
    const double a = t[c] > 1.0 ? beta : alpha;
    res.a_opt[c] = a;
    res.max_fenchel_residual = std::max(res.max_fenchel_residual, fenchel_residual(psi, a, t[c]));
    if (std::abs(std::sqrt(t[c]) - 1.0) <= options.band) out.band_measure += h2;
    if (a == beta) out.beta_measure += h2;
  }
  return out;
}

ComplianceResult compliance(const CellField& a, const ScalarField& f, double tol) {
  const Grid& g = a.grid();
  for (std::size_t c : g.active_cells()) {
    if (!(a[c] > 0.0)) throw std::invalid_argument("compliance: coefficient must be > 0 on active cells");
  }
  const LinearOperator A = assemble_diffusion(a);
  auto sol = solve(A, f, {.tol = tol, .method = SolveMethod::cholesky});
  if (!sol.u) throw SolverError("compliance: state solve failed: " + sol.report.message);
  ComplianceResult out{0.0, 0.0, std::move(*sol.u), sol.report};
  out.compliance = inner(f, out.u);
  out.energy = 0.5 * inner(A.apply(out.u), out.u) - inner(f, out.u);
  out.report.objective = out.compliance;
  return out;
}

// --- G-closure ------------------------------------------------------------

namespace {

constexpr double kSlack = 1e-12;

bool leq(double a, double b) {
  if (a == b) return true;  // also covers inf <= inf
  return a <= b + kSlack * std::max({1.0, std::abs(a), std::abs(b)});
}

struct Lamination {
  double alpha, beta;
  double mu(double t) const { return t * alpha + (1.0 - t) * beta; }
  double nu(double t) const { return 1.0 / (t / alpha + (1.0 - t) / beta); }
};

double inv_or_inf(double d) { return d > 0.0 ? 1.0 / d : kInf; }

// Threshold of a predicate that is monotone in t over [0,1]. For a
// "lower" predicate (true for t >= tau) returns tau; for an "upper" one (true
// for t <= sigma) returns sigma. Returns NaN if the predicate is never true.
double threshold(const std::function<bool(double)>& pred, bool lower) {
  constexpr int kSamples = 1025;
  auto t_of = [](int k) { return static_cast<double>(k) / (kSamples - 1); };
  if (lower) {
    int k = 0;
    while (k < kSamples && !pred(t_of(k))) ++k;
    if (k == kSamples) return std::numeric_limits<double>::quiet_NaN();
    if (k == 0) return 0.0;
    double bad = t_of(k - 1), good = t_of(k);
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (bad + good);
      (pred(mid) ? good : bad) = mid;
    }
    return good;
  }
  int k = kSamples - 1;
  while (k >= 0 && !pred(t_of(k))) --k;
  if (k < 0) return std::numeric_limits<double>::quiet_NaN();
  if (k == kSamples - 1) return 1.0;
  double good = t_of(k), bad = t_of(k + 1);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (bad + good);
    (pred(mid) ? good : bad) = mid;
  }
  return good;
}

void check_candidate(const EigenPairCandidate& cand) {
  if (!(cand.alpha > 0.0) || !(cand.alpha < cand.beta)) throw std::invalid_argument("gclosure: require 0 < alpha < beta");
  if (cand.eigenvalues.empty()) throw std::invalid_argument("gclosure: no eigenvalues");
}

}  // namespace

bool lens_contains(double l1, double l2, double alpha, double beta) {
  if (l1 > l2) std::swap(l1, l2);
  if (!leq(alpha, l1) || !leq(l2, beta)) return false;
  const double lower = alpha * beta / (alpha + beta - l1);
  const double upper = alpha + beta - alpha * beta / l1;
  return leq(lower, l2) && leq(l2, upper);
}

bool gclosure_contains_tsearch(const EigenPairCandidate& cand) {
  check_candidate(cand);
  std::vector<double> lam = cand.eigenvalues;
  std::sort(lam.begin(), lam.end());
  const double a = cand.alpha;
  const double b = cand.beta;
  if (!leq(a, lam.front()) || !leq(lam.back(), b)) return false;
  const auto d = static_cast<double>(lam.size());
  const Lamination lm{a, b};

  double sum_a = 0.0, sum_b = 0.0;
  for (double l : lam) {
    sum_a += inv_or_inf(l - a);
    sum_b += inv_or_inf(b - l);
  }
  // Harmonic-side bound: RHS grows with t.
  auto c_alpha = [&](double t) {
    const double rhs = inv_or_inf(lm.nu(t) - a) + (d - 1.0) * inv_or_inf(lm.mu(t) - a);
    return leq(sum_a, rhs);
  };
  // Arithmetic-side bound: RHS shrinks with t.
  auto c_beta = [&](double t) {
    const double rhs = inv_or_inf(b - lm.nu(t)) + (d - 1.0) * inv_or_inf(b - lm.mu(t));
    return leq(sum_b, rhs);
  };
  auto c_nu = [&](double t) { return leq(lm.nu(t), lam.front()); };
  auto c_mu = [&](double t) { return leq(lam.back(), lm.mu(t)); };

  const double taus[] = {threshold(c_alpha, true), threshold(c_nu, true)};
  const double sigmas[] = {threshold(c_beta, false), threshold(c_mu, false)};
  for (double v : {taus[0], taus[1], sigmas[0], sigmas[1]}) {
    if (std::isnan(v)) return false;
  }
  const double lo = std::max(taus[0], taus[1]);
  const double hi = std::min(sigmas[0], sigmas[1]);
  if (lo > hi + 1e-12) return false;
  const double t = std::clamp(0.5 * (lo + hi), 0.0, 1.0);
  return c_alpha(t) && c_beta(t) && c_nu(t) && c_mu(t);
}

bool gclosure_contains(const EigenPairCandidate& cand) {
  check_candidate(cand);
  if (cand.eigenvalues.size() == 2) {
    return lens_contains(cand.eigenvalues[0], cand.eigenvalues[1], cand.alpha, cand.beta);
  }
  return gclosure_contains_tsearch(cand);
}

}  // namespace ellopt
