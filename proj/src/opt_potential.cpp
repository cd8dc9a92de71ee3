#include "ellopt/opt_potential.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ellopt/energy.hpp"
#include "ellopt/set_metrics.hpp"

namespace ellopt {

namespace {

Vec field_dofs(const ScalarField& f) {
  const auto d = f.dofs();
  return Eigen::Map<const Vec>(d.data(), static_cast<Eigen::Index>(d.size()));
}

ScalarField make_field(const GridPtr& grid, const Vec& x) {
  return ScalarField::from_dofs(grid, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

double relative_l2(const ScalarField& a, const ScalarField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t n : a.grid().interior_nodes()) {
    num += (a[n] - b[n]) * (a[n] - b[n]);
    den += b[n] * b[n];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace

double semilinear_g(const ConvexFunctionSpec& psi, double s) { return s * conjugate_derivative(psi, s * s); }

double semilinear_g_prime(const ConvexFunctionSpec& psi, double s) {
  const double t = s * s;
  if (t == 0.0) return conjugate_derivative(psi, 0.0);
  return conjugate_derivative(psi, t) + 2.0 * t * conjugate_second_derivative(psi, t);
}

GradientEnergy compliance_potential_energy(const ScalarField& f, const ConvexFunctionSpec& psi) {
  Profile dirichlet{[](double t) { return t; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
  Profile conj{
      [psi](double s) { return conjugate(psi, s * s); },
      [psi](double s) { return 2.0 * semilinear_g(psi, s); },
      [psi](double s) { return 2.0 * semilinear_g_prime(psi, s); },
  };
  return GradientEnergy(f.grid_ptr(), dirichlet, conj, 2.0 * field_dofs(f));
}

CompliancePotentialResult solve_compliance_potential(const ScalarField& f, const ConvexFunctionSpec& psi, double tol) {
  validate(psi);
  if (!is_superlinear(psi)) {
    throw std::invalid_argument("solve_compliance_potential: psi must be superlinear (power or quadratic)");
  }
  const GridPtr& grid = f.grid_ptr();
  const Vec load = 2.0 * field_dofs(f);
  const double h2 = grid->h() * grid->h();

  const GradientEnergy energy = compliance_potential_energy(f, psi);
  Vec u = Vec::Zero(load.size());
  const double scale = h2 * load.norm();
  SolveReport rep;
  if (scale == 0.0) {
    rep.converged = true;
    rep.message = "zero load";
  } else {
    rep = minimize_newton(energy, u, {.tol = tol, .gradient_scale = scale, .max_iterations = 200});
  }

  CompliancePotentialResult out{{make_field(grid, u), ScalarField(grid), std::nullopt, 0.0, rep}, 0.0, 0.0, 0.0, 0.0};
  PotentialResult& res = out.base;
  Vec V(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) V[i] = conjugate_derivative(psi, u[i] * u[i]);
  res.V_opt = make_field(grid, V);
  out.max_V = V.size() ? V.maxCoeff() : 0.0;

  out.aux_objective = energy.value(u);
  double psi_sum = 0.0;
  for (Eigen::Index i = 0; i < V.size(); ++i) psi_sum += evaluate(psi, V[i]);
  out.coupled_cost = inner(f, res.u_bar) + h2 * psi_sum;
  res.cost = out.coupled_cost;
  res.report.objective = out.aux_objective;

  if (scale > 0.0) {
    auto lin = solve(assemble_schrodinger(res.V_opt), f, {.tol = 1e-13, .method = SolveMethod::cholesky});
    if (!lin.u) throw SolverError("relinearized solve failed: " + lin.report.message);
    out.self_consistency = relative_l2(*lin.u, res.u_bar);
  }
  return out;
}

ScalarField solve_adjoint(const ScalarField& V, const ScalarField& rhs, double tol) {
  auto sol = solve(assemble_schrodinger(V), rhs, {.tol = tol, .method = SolveMethod::cg});
  if (!sol.u) throw SolverError("adjoint solve failed: " + sol.report.message);
  return std::move(*sol.u);
}

PotentialOptimalityReport check_optimality_potential(const ScalarField& u, const ScalarField& v, const ScalarField& V,
                                                     const ConvexFunctionSpec& psi) {
  if (&u.grid() != &v.grid() || &u.grid() != &V.grid()) {
    throw std::invalid_argument("check_optimality_potential: fields live on different grids");
  }
  PotentialOptimalityReport rep;
  for (std::size_t n : u.grid().interior_nodes()) {
    const double t = u[n] * v[n];
    rep.max_fenchel_residual = std::max(rep.max_fenchel_residual, fenchel_residual(psi, V[n], t));
    const double lo = h_minus_of(psi, t);
    const double hi = h_of(psi, t);
    double viol = 0.0;
    if (std::isnan(lo) || std::isnan(hi)) {
      viol = kInf;
    } else {
      viol = std::max({0.0, lo - V[n], V[n] - hi});
    }
    rep.max_h_violation = std::max(rep.max_h_violation, viol);
  }
  return rep;
}

BangBangPotentialResult solve_bangbang_potential(const ScalarField& f, double alpha, double beta, double k,
                                                 const BangBangPotentialOptions& options) {
  if (!(alpha >= 0.0) || !(alpha < beta)) throw std::invalid_argument("bang-bang potential: require 0 <= alpha < beta");
  if (!(k >= 0.0)) throw std::invalid_argument("bang-bang potential: require k >= 0");
  for (double v : f.values()) {
    if (v < 0.0) throw std::invalid_argument("bang-bang potential: require f >= 0");
  }
  const GridPtr& grid = f.grid_ptr();
  const std::size_t N = grid->num_interior();
  const double h2 = grid->h() * grid->h();
  const ScalarField ones = ScalarField::constant(grid, 1.0);
  const SolveOptions lin{.tol = options.tol, .method = SolveMethod::cholesky};

  struct State {
    Vec V;
    ScalarField u;
    ScalarField v;
    double cost;
  };
  auto evaluate_state = [&](const Vec& V, bool with_adjoint) {
    const ScalarField Vf = make_field(grid, V);
    Resolvent R(assemble_schrodinger(Vf), lin);
    auto su = R.solve(f);
    if (!su.u) throw SolverError("bang-bang potential: state solve failed: " + su.report.message);
    State s{V, std::move(*su.u), ScalarField(grid), 0.0};
    s.cost = integrate(s.u) + k * h2 * V.sum();
    if (with_adjoint) s.v = R.apply(ones);
    return s;
  };

  BangBangPotentialResult out{{ScalarField(grid), ScalarField(grid), std::nullopt, 0.0, {}}, 0.0, 0.0, 0.0, 0.0, 0.0, {}};
  State at_alpha = evaluate_state(Vec::Constant(static_cast<Eigen::Index>(N), alpha), true);
  State at_beta = evaluate_state(Vec::Constant(static_cast<Eigen::Index>(N), beta), true);
  out.cost_at_alpha = at_alpha.cost;
  out.cost_at_beta = at_beta.cost;
  State cur = at_alpha.cost <= at_beta.cost ? std::move(at_alpha) : std::move(at_beta);
  out.cost_history.push_back(cur.cost);

  SolveReport& rep = out.base.report;
  std::size_t pending = 0;
  bool stationary = false;
  while (rep.iterations < options.max_iterations) {
    std::vector<std::size_t> flips;
    std::vector<double> margin(N);
    const auto nodes = grid->interior_nodes();
    for (std::size_t i = 0; i < N; ++i) {
      const double t = cur.u[nodes[i]] * cur.v[nodes[i]];
      margin[i] = std::abs(t - k);
      const double target = t > k ? beta : alpha;
      if (target != cur.V[static_cast<Eigen::Index>(i)]) flips.push_back(i);
    }
    pending = flips.size();
    if (flips.empty()) {
      stationary = true;
      break;
    }
    std::stable_sort(flips.begin(), flips.end(), [&](std::size_t a, std::size_t b) { return margin[a] > margin[b]; });

    bool accepted = false;
    for (std::size_t m = flips.size(); m >= 1; m /= 2) {
      Vec V = cur.V;
      for (std::size_t q = 0; q < m; ++q) {
        const auto i = static_cast<Eigen::Index>(flips[q]);
        V[i] = V[i] == alpha ? beta : alpha;
      }
      State trial = evaluate_state(V, true);
      if (trial.cost < cur.cost - 1e-14 * std::abs(cur.cost)) {
        cur = std::move(trial);
        accepted = true;
        break;
      }
    }
    ++rep.iterations;
    if (!accepted) {
      // No cost-decreasing switch is left; the remaining mismatches sit at
      // the discrete resolution limit.
      stationary = true;
      break;
    }
    out.cost_history.push_back(cur.cost);
  }

  PotentialResult& res = out.base;
  res.u_bar = std::move(cur.u);
  res.V_opt = make_field(grid, cur.V);
  res.v_adj = std::move(cur.v);
  res.cost = cur.cost;
  rep.objective = cur.cost;
  rep.final_residual = static_cast<double>(pending) / static_cast<double>(N);
  rep.converged = stationary;
  rep.message = stationary ? (pending == 0 ? "switching set empty" : "no cost-decreasing switch left")
                           : "iteration cap reached before the set stabilized";

  ScalarField high(grid);
  std::size_t transition = 0;
  for (std::size_t n : grid->interior_nodes()) {
    const double v = res.V_opt[n];
    high.set(n, v == beta ? 1.0 : 0.0);
    if (v > alpha && v < beta) ++transition;
  }
  out.perimeter = perimeter(high);
  out.beta_area = set_area(high);
  out.transition_fraction = static_cast<double>(transition) / static_cast<double>(N);
  return out;
}

}  // namespace ellopt
