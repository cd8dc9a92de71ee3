#include "ellopt/opt_source.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ellopt/energy.hpp"
#include "ellopt/set_metrics.hpp"

namespace ellopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* what) {
  if (&a.grid() != &b.grid()) throw std::invalid_argument(std::string(what) + ": fields live on different grids");
}

double defect_or_nan(const ScalarField& indicator) {
  for (std::size_t n : indicator.grid().interior_nodes()) {
    if (indicator[n] == 1.0) return convexity_defect(indicator);
  }
  return kNaN;
}

}  // namespace

ScalarField compute_w(const Resolvent& R, const ScalarField& ds_j, const ScalarField& dz_j) {
  require_same_grid(ds_j, dz_j, "compute_w");
  if (&ds_j.grid() != &R.op().grid()) throw std::invalid_argument("compute_w: resolvent built on another grid");
  const ScalarField r = R.apply(ds_j);
  ScalarField w(ds_j.grid_ptr());
  for (std::size_t n : ds_j.grid().interior_nodes()) w.set(n, r[n] + dz_j[n]);
  return w;
}

ScalarField compute_w(const ScalarField& ds_j, const ScalarField& dz_j, double tol) {
  Resolvent R(assemble_laplacian(ds_j.grid_ptr()), {.tol = tol, .method = SolveMethod::cholesky});
  return compute_w(R, ds_j, dz_j);
}

OptimalityReport check_source_optimality(const ScalarField& f, const ConvexFunctionSpec& psi, double m,
                                         const ScalarField& w, double tol) {
  require_same_grid(f, w, "check_source_optimality");
  validate(psi);
  if (!(m > 0.0)) throw std::invalid_argument("check_source_optimality: m must be positive");
  const Grid& g = f.grid();
  const double h2 = g.h() * g.h();
  const Interval dom = domain_of(psi);

  OptimalityReport rep{w, 0.0, 0.0, MultiplierBranch::lambda_zero, 0.0, 0.0, 0.0, 0.0};
  double wmax = 0.0;
  for (std::size_t n : g.interior_nodes()) {
    rep.constraint_value += h2 * evaluate(psi, f[n]);
    wmax = std::max(wmax, std::abs(w[n]));
  }

  // lambda = 0: sign conditions, with |w| below tol * max|w| counted as zero.
  double r0 = std::max(0.0, (rep.constraint_value - m) / m);
  const double wcut = tol * wmax;
  for (std::size_t n : g.interior_nodes()) {
    const double wn = w[n];
    if (dom.hi == kInf) r0 = std::max(r0, -wn);
    if (dom.lo == -kInf) r0 = std::max(r0, wn);
    if (wn > wcut) r0 = std::max(r0, std::abs(f[n] - dom.lo));
    if (wn < -wcut) r0 = std::max(r0, std::abs(f[n] - dom.hi));
  }
  rep.residual_lambda_zero = std::isnan(r0) ? kInf : r0;

  // lambda > 0: saturation root, then the pointwise Fenchel gap.
  auto saturation = [&](double lambda) {
    double s = 0.0;
    for (std::size_t n : g.interior_nodes()) s += h2 * evaluate(psi, conjugate_derivative(psi, -w[n] / lambda));
    return s - m;
  };
  double lambda = kNaN;
  if (wmax > 0.0) {
    double prev_l = 0.0, prev_v = 0.0;
    for (int k = 30; k >= -30; --k) {
      const double l = wmax * std::pow(10.0, k);
      const double v = saturation(l);
      if (v == 0.0) {
        lambda = l;
        break;
      }
      if (k < 30 && std::isfinite(v) && std::isfinite(prev_v) && (v > 0.0) != (prev_v > 0.0)) {
        double lo = std::log(l), hi = std::log(prev_l);
        const bool pos_at_lo = v > 0.0;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
          const double mid = 0.5 * (lo + hi);
          const double vm = saturation(std::exp(mid));
          if ((vm > 0.0) == pos_at_lo) lo = mid; else hi = mid;
        }
        lambda = std::exp(0.5 * (lo + hi));
        break;
      }
      prev_l = l;
      prev_v = v;
    }
  }
  rep.lambda_candidate = lambda;
  if (std::isnan(lambda)) {
    rep.residual_lambda_positive = kInf;
  } else {
    double r1 = std::abs(rep.constraint_value - m) / m;
    for (std::size_t n : g.interior_nodes()) r1 = std::max(r1, fenchel_residual(psi, f[n], -w[n] / lambda));
    rep.residual_lambda_positive = std::isnan(r1) ? kInf : r1;
  }

  if (rep.residual_lambda_positive < rep.residual_lambda_zero) {
    rep.branch = MultiplierBranch::lambda_positive;
    rep.lambda = lambda;
    rep.max_residual = rep.residual_lambda_positive;
  } else {
    rep.branch = MultiplierBranch::lambda_zero;
    rep.lambda = 0.0;
    rep.max_residual = rep.residual_lambda_zero;
  }
  return rep;
}

GradientEnergy threshold_energy(const GridPtr& grid, double alpha, double beta, double s, double eps) {
  const double jump = beta - alpha;
  const Profile half_dirichlet{[](double t) { return 0.5 * t; }, [](double) { return 0.5; }, [](double) { return 0.0; }};
  // -G_eps(u); G_eps' falls linearly from beta to alpha on |u - s| < eps.
  const Profile smoothed_source{
      [=](double u) {
        const double d = u - s;
        if (d <= -eps) return -beta * u;
        if (d >= eps) return -(alpha * u + jump * s);
        return -(beta * u - jump * (d + eps) * (d + eps) / (4.0 * eps));
      },
      [=](double u) {
        const double d = u - s;
        if (d <= -eps) return -beta;
        if (d >= eps) return -alpha;
        return -(beta - jump * (d + eps) / (2.0 * eps));
      },
      [=](double u) {
        const double d = u - s;
        return (d > -eps && d < eps) ? jump / (2.0 * eps) : 0.0;
      },
  };
  return GradientEnergy(grid, half_dirichlet, smoothed_source, Vec::Zero(static_cast<Eigen::Index>(grid->num_interior())));
}

ThresholdState solve_threshold_problem(const GridPtr& grid, double alpha, double beta, double s,
                                       const ComplianceSourceOptions& options, const ScalarField* guess) {
  if (!(s > 0.0)) throw std::invalid_argument("threshold problem: s must be positive");
  const auto nodes = grid->interior_nodes();
  const double h2 = grid->h() * grid->h();
  ThresholdState st{ScalarField(grid), ScalarField(grid), 0.0, {}};
  Vec u = Vec::Zero(static_cast<Eigen::Index>(nodes.size()));
  if (guess) {
    const auto g = guess->dofs();
    u = Eigen::Map<const Vec>(g.data(), static_cast<Eigen::Index>(g.size()));
  }
  const double scale = h2 * beta * std::sqrt(static_cast<double>(u.size()));
  double eps = (guess ? options.eps_final : options.eps_start) * s;
  const double eps_last = options.eps_final * s;
  for (;;) {
    const bool last = eps <= eps_last * (1.0 + 1e-12);
    if (last) eps = eps_last;
    const GradientEnergy energy = threshold_energy(grid, alpha, beta, s, eps);
    const SolveReport rep = minimize_newton(
        energy, u, {.tol = last ? options.tol : std::max(options.tol, 1e-6), .gradient_scale = scale});
    st.report.iterations += rep.iterations;
    st.report.final_residual = rep.final_residual;
    st.report.objective = rep.objective;
    st.report.converged = rep.converged;
    st.report.message = rep.message;
    if (!rep.converged) {
      st.report.message = "threshold problem stalled at eps = " + std::to_string(eps) + ": " + rep.message;
      break;
    }
    if (last) break;
    eps /= options.eps_factor;
  }
  st.u = ScalarField::from_dofs(grid, std::span<const double>(u.data(), static_cast<std::size_t>(u.size())));
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    st.f.set(nodes[q], u[static_cast<Eigen::Index>(q)] <= s ? beta : alpha);
  }
  st.volume = integrate(st.f);
  return st;
}

BangBangResult solve_compliance_source(const GridPtr& grid, double alpha, double beta, double m,
                                       const ComplianceSourceOptions& options) {
  if (!(alpha >= 0.0) || !(alpha < beta)) throw std::invalid_argument("compliance source: require 0 <= alpha < beta");
  const double omega = area(grid->domain());
  if (!(m > alpha * omega) || !(m < beta * omega)) {
    throw std::invalid_argument("compliance source: require alpha|Omega| < m < beta|Omega|");
  }
  const Resolvent R(assemble_laplacian(grid), {.tol = 1e-12, .method = SolveMethod::cholesky});
  const auto nodes = grid->interior_nodes();
  const double all_nodes = static_cast<double>(nodes.size()) * grid->h() * grid->h();

  // The ends of the bracket are explicit: s = 0 gives f = alpha (u = R(alpha)
  // has no node below 0), s >= max R(beta) gives f = beta.
  const ScalarField u_beta = R.apply(ScalarField::constant(grid, beta));
  double s_lo = 0.0;
  double s_hi = 0.0;
  for (std::size_t n : nodes) s_hi = std::max(s_hi, u_beta[n]);
  ThresholdState lo{R.apply(ScalarField::constant(grid, alpha)), ScalarField::constant(grid, alpha), alpha * all_nodes, {}};
  ThresholdState hi{u_beta, ScalarField::constant(grid, beta), beta * all_nodes, {}};

  BangBangResult out{ScalarField(grid), ScalarField(grid), ScalarField(grid), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, {}, {}};
  out.history.push_back({s_lo, lo.volume, 0, true});
  out.history.push_back({s_hi, hi.volume, 0, true});
  if (!(lo.volume < m) || !(hi.volume >= m)) {
    throw SolverError("compliance source: volume bracket [" + std::to_string(lo.volume) + ", " +
                      std::to_string(hi.volume) + "] does not contain m = " + std::to_string(m));
  }
  bool inner_ok = true;
  std::string inner_message;
  std::size_t steps = 0;
  const double one_node = (beta - alpha) * grid->h() * grid->h();
  while (steps < options.max_bisection && s_hi - s_lo > options.s_resolution * s_hi && hi.volume - m > 0.5 * one_node) {
    const double s = 0.5 * (s_lo + s_hi);
    ThresholdState mid = solve_threshold_problem(grid, alpha, beta, s, options, &hi.u);
    ++steps;
    if (!mid.report.converged) {
      inner_ok = false;
      inner_message = mid.report.message;
    }
    const bool ok = lo.volume <= mid.volume && mid.volume <= hi.volume;
    out.history.push_back({s, mid.volume, mid.report.iterations, ok});
    if (mid.volume >= m) {
      s_hi = s;
      hi = std::move(mid);
    } else {
      s_lo = s;
      lo = std::move(mid);
    }
  }

  out.f_opt = std::move(hi.f);
  out.u = R.apply(out.f_opt);
  out.s_threshold = s_hi;
  out.volume = hi.volume;
  ScalarField alpha_set(grid);
  for (std::size_t n : nodes) {
    const bool b = out.f_opt[n] == beta;
    out.E_indicator.set(n, b ? 1.0 : 0.0);
    alpha_set.set(n, b ? 0.0 : 1.0);
  }
  out.beta_area = set_area(out.E_indicator);
  out.perimeter = perimeter(out.E_indicator);
  out.convexity_defect = defect_or_nan(alpha_set);
  out.convexity_defect_beta_set = defect_or_nan(out.E_indicator);

  SolveReport& rep = out.report;
  rep.iterations = steps;
  rep.objective = inner(out.f_opt, out.u);
  rep.final_residual = std::abs(out.volume - m) / m;
  const bool bracket_ok = std::all_of(out.history.begin(), out.history.end(), [](const auto& h) { return h.bracket_ok; });
  const bool volume_ok = std::abs(out.volume - m) <= beta * grid->h() * out.perimeter + 1e-12 * m;
  rep.converged = inner_ok && bracket_ok && volume_ok;
  if (!inner_ok) {
    rep.message = inner_message;
  } else if (!bracket_ok) {
    rep.message = "volume not monotone in s along the bisection";
  } else if (!volume_ok) {
    rep.message = "volume mismatch exceeds one cell layer";
  } else {
    rep.message = "volume matched";
  }
  return out;
}

EigenSourceResult solve_eigen_source(const GridPtr& grid, double m, double tol) {
  if (!(m > 0.0)) throw std::invalid_argument("eigen source: m must be positive");
  EigenResult eig = smallest_eigenpair(grid, tol);
  EigenSourceResult out{ScalarField(grid), ScalarField(grid), 0.0, 0.0, 0.0, 0.0, {}};
  const double scale = std::sqrt(2.0 * m);
  for (std::size_t n : grid->interior_nodes()) out.f.set(n, scale * eig.phi[n]);
  auto sol = solve(assemble_laplacian(grid), out.f, {.tol = 1e-14, .method = SolveMethod::cholesky});
  if (!sol.u) throw SolverError("eigen source: state solve failed: " + sol.report.message);
  out.u = std::move(*sol.u);
  out.mu1 = eig.mu;
  out.lambda = 1.0 / (eig.mu * eig.mu);
  out.objective = 0.5 * inner(out.u, out.u);
  out.objective_formula = out.lambda * m;
  out.report = eig.report;
  return out;
}

}  // namespace ellopt
