#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ellopt/opt_source.hpp"
#include "ellopt/set_metrics.hpp"

using namespace ellopt;

namespace {

constexpr double pi = std::numbers::pi;

ScalarField poisson(const ScalarField& f) {
  auto out = solve(assemble_laplacian(f.grid_ptr()), f, {.tol = 1e-13, .method = SolveMethod::cholesky});
  REQUIRE(out.u);
  return *out.u;
}

}  // namespace

TEST_CASE("w is the resolvent of ds plus dz") {
  const auto g = build_grid(Disk{1.0, {}}, 1.0 / 16.0);
  const auto a = ScalarField::from_function(g, [](Point2 p) { return 1.0 + p.x; });
  const auto b = ScalarField::from_function(g, [](Point2 p) { return p.y * p.y; });
  const auto w = compute_w(a, b);
  const auto Ra = poisson(a);
  for (std::size_t n : g->interior_nodes()) CHECK(w[n] == doctest::Approx(Ra[n] + b[n]).epsilon(1e-9));
}

TEST_CASE("quadratic source: the multiplier branch matches an explicit optimum") {
  // psi = s^2/2 on the whole line: f = -w / lambda is optimal for the given w,
  // with lambda fixed by int f^2 / 2 = m.
  const auto g = build_grid(UnitSquare{}, 1.0 / 16.0);
  const ConvexFunctionSpec psi = Quadratic{true};
  const double m = 0.3;
  const auto w = ScalarField::from_function(g, [](Point2 p) { return -std::sin(pi * p.x) * std::sin(pi * p.y); });
  const double w2 = inner(w, w);
  const double lambda = std::sqrt(w2 / (2.0 * m));
  ScalarField f(g);
  for (std::size_t n : g->interior_nodes()) f.set(n, -w[n] / lambda);
  const auto rep = check_source_optimality(f, psi, m, w);
  CHECK(rep.branch == MultiplierBranch::lambda_positive);
  CHECK(rep.lambda == doctest::Approx(lambda).epsilon(1e-6));
  CHECK(rep.max_residual < 1e-6);
  CHECK(rep.constraint_value == doctest::Approx(m));

  // A perturbed source is flagged.
  ScalarField bad = f;
  bad.set(g->interior_nodes()[40], f[g->interior_nodes()[40]] + 0.5);
  CHECK(check_source_optimality(bad, psi, m, w).max_residual > 1e-3);
}

TEST_CASE("threshold problem: f switches where u crosses s") {
  const auto g = build_grid(Disk{1.0, {}}, 1.0 / 24.0);
  const double s = 0.05;
  const auto st = solve_threshold_problem(g, 0.0, 1.0, s);
  CHECK(st.report.converged);
  for (std::size_t n : g->interior_nodes()) {
    CHECK(st.u[n] >= -1e-12);
    CHECK(st.f[n] == (st.u[n] <= s ? 1.0 : 0.0));
  }
  CHECK(st.volume == doctest::Approx(integrate(st.f)));
  // The smoothed Euler-Lagrange residual is small: -Lap u = f away from the level set.
  const auto Lu = assemble_laplacian(g).apply(st.u);
  for (std::size_t n : g->interior_nodes()) {
    if (std::abs(st.u[n] - s) < 0.01 * s) continue;
    CHECK(Lu[n] == doctest::Approx(st.f[n]).epsilon(1e-6).scale(1.0));
  }
  // Larger thresholds give larger beta sets.
  const auto st2 = solve_threshold_problem(g, 0.0, 1.0, 2.0 * s);
  CHECK(st2.volume >= st.volume);
  CHECK_THROWS_AS(solve_threshold_problem(g, 0.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("compliance source on the disk is the outer annulus") {
  const double h = 1.0 / 32.0;
  const auto g = build_grid(Disk{1.0, {}}, h);
  const double m = pi / 2.0;
  const auto res = solve_compliance_source(g, 0.0, 1.0, m);
  CHECK(res.report.converged);
  for (std::size_t n : g->interior_nodes()) CHECK((res.f_opt[n] == 0.0 || res.f_opt[n] == 1.0));
  CHECK(res.volume >= m);
  CHECK(res.beta_area == doctest::Approx(set_area(res.E_indicator)));
  CHECK(std::abs(res.beta_area - m) <= h * res.perimeter);
  // By symmetry the beta set is r > rho with pi (1 - rho^2) = m.
  const double rho = std::sqrt(1.0 - m / pi);
  for (std::size_t n : g->interior_nodes()) {
    const Point2 p = g->position(n);
    const double r = std::hypot(p.x, p.y);
    if (r < rho - 2.0 * h) CHECK(res.f_opt[n] == 0.0);
    if (r > rho + 2.0 * h) CHECK(res.f_opt[n] == 1.0);
  }
  CHECK(res.convexity_defect < 0.05);
  CHECK(res.convexity_defect_beta_set > 0.5);
}

TEST_CASE("eigen source on the square") {
  const double h = 1.0 / 32.0;
  const auto g = build_grid(UnitSquare{}, h);
  const double m = 0.5;
  const auto res = solve_eigen_source(g, m);
  const double mu = 8.0 / (h * h) * std::pow(std::sin(pi * h / 2.0), 2);
  CHECK(res.mu1 == doctest::Approx(mu).epsilon(1e-8));
  CHECK(res.lambda == doctest::Approx(1.0 / (mu * mu)).epsilon(1e-8));
  CHECK(inner(res.f, res.f) == doctest::Approx(2.0 * m).epsilon(1e-9));
  CHECK(res.objective == doctest::Approx(res.lambda * m).epsilon(1e-8));
  const auto u = poisson(res.f);
  CHECK(0.5 * inner(u, u) == doctest::Approx(res.objective).epsilon(1e-8));
  // No admissible competitor does better: the normalized constant source.
  auto one = ScalarField::constant(g, 1.0);
  const double scale = std::sqrt(2.0 * m / inner(one, one));
  ScalarField c(g);
  for (std::size_t n : g->interior_nodes()) c.set(n, scale);
  const auto uc = poisson(c);
  CHECK(0.5 * inner(uc, uc) <= res.objective);
}
