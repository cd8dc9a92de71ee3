#include <doctest.h>

#include <cmath>
#include <random>

#include "ellopt/config.hpp"
#include "ellopt/opt_potential.hpp"
#include "ellopt/set_metrics.hpp"

using namespace ellopt;

namespace {

double integral(const ScalarField& u) {
  double s = 0.0;
  for (std::size_t n : u.grid().interior_nodes()) s += u[n];
  return u.grid().h() * u.grid().h() * s;
}

ScalarField solve_linear(const ScalarField& V, const ScalarField& f) {
  auto out = solve(assemble_schrodinger(V), f, {.tol = 1e-13, .method = SolveMethod::cholesky});
  REQUIRE(out.u);
  return *out.u;
}

}  // namespace

TEST_CASE("semilinear nonlinearity of the quadratic is the cube") {
  for (double s : {-1.5, -0.2, 0.0, 0.7, 2.0}) {
    CHECK(semilinear_g(Quadratic{}, s) == doctest::Approx(s * s * s));
    CHECK(semilinear_g_prime(Quadratic{}, s) == doctest::Approx(3.0 * s * s));
  }
  // psi = s^3 / 3: (psi*)'(t) = sqrt(t), so g(s) = s |s|.
  CHECK(semilinear_g(PowerOverP{3.0}, -2.0) == doctest::Approx(-4.0));
}

TEST_CASE("compliance potential solves -Lap u + u^3 = f") {
  const auto g = build_grid(Disk{1.0, {}}, 1.0 / 24.0);
  const auto f = ScalarField::from_function(g, [](Point2 p) { return 20.0 * (1.0 + p.x); });
  const auto res = solve_compliance_potential(f, Quadratic{}, 1e-11);
  CHECK(res.base.report.converged);
  const auto& u = res.base.u_bar;
  const auto Lu = assemble_laplacian(g).apply(u);
  double worst = 0.0, scale = 0.0;
  for (std::size_t n : g->interior_nodes()) {
    worst = std::max(worst, std::abs(Lu[n] + u[n] * u[n] * u[n] - f[n]));
    scale = std::max(scale, std::abs(f[n]));
    CHECK(res.base.V_opt[n] == doctest::Approx(u[n] * u[n]));
  }
  CHECK(worst <= 1e-8 * scale);
  CHECK(res.self_consistency <= 1e-6);
  // Relinearizing with V = u^2 reproduces u (independent linear solve).
  const auto uV = solve_linear(res.base.V_opt, f);
  double num = 0.0, den = 0.0;
  for (std::size_t n : g->interior_nodes()) {
    num += (uV[n] - u[n]) * (uV[n] - u[n]);
    den += u[n] * u[n];
  }
  CHECK(std::sqrt(num / den) <= 1e-6);
  // At the optimum the two costs coincide.
  CHECK(res.coupled_cost == doctest::Approx(-res.aux_objective).epsilon(1e-6));
}

TEST_CASE("compliance potential rejects linear-growth psi") {
  const auto g = build_grid(UnitSquare{}, 0.125);
  CHECK_THROWS_AS(solve_compliance_potential(ScalarField::constant(g, 1.0), LinearOnInterval{}), std::invalid_argument);
}

TEST_CASE("adjoint solve is the transpose of the state solve") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0.0, 5.0), N(-1.0, 1.0);
  const auto g = build_grid(Ellipse{2.0, 1.0}, 1.0 / 12.0);
  const auto V = ScalarField::from_function(g, [&](Point2) { return U(rng); });
  const auto a = ScalarField::from_function(g, [&](Point2) { return N(rng); });
  const auto b = ScalarField::from_function(g, [&](Point2) { return N(rng); });
  const auto va = solve_adjoint(V, a), vb = solve_adjoint(V, b);
  CHECK(inner(va, b) == doctest::Approx(inner(a, vb)).epsilon(1e-9));
}

TEST_CASE("optimality check of a linear potential") {
  const auto g = build_grid(UnitSquare{}, 1.0 / 16.0);
  const LinearOnInterval psi{0.0, 1.0, 1.0};
  // u v > k everywhere: V must be beta.
  const auto u = ScalarField::constant(g, 2.0), v = ScalarField::constant(g, 1.0);
  CHECK(check_optimality_potential(u, v, ScalarField::constant(g, 1.0), psi).max_h_violation == doctest::Approx(0.0));
  CHECK(check_optimality_potential(u, v, ScalarField::constant(g, 0.0), psi).max_h_violation > 0.5);
}

TEST_CASE("bang-bang potential beats both constants and is binary") {
  const Preset* p = find_preset("ex31-bangbang-potential");
  REQUIRE(p);
  ExperimentConfig cfg = p->config;
  const auto g = build_grid(cfg.domain, 1.0 / 32.0);
  const auto f = std::get<ScalarField>(make_source(cfg, g));
  const auto res = solve_bangbang_potential(f, cfg.alpha, cfg.beta, cfg.k);
  CHECK(res.base.report.converged);

  const auto one = ScalarField::constant(g, 1.0);
  const double c0 = integral(solve_linear(ScalarField(g), f));
  const double c1 = integral(solve_linear(one, f)) + cfg.k * integral(one);
  CHECK(res.cost_at_alpha == doctest::Approx(c0).epsilon(1e-8));
  CHECK(res.cost_at_beta == doctest::Approx(c1).epsilon(1e-8));
  CHECK(res.base.cost <= std::min(c0, c1));

  // Recompute the cost of the returned V independently.
  const auto uV = solve_linear(res.base.V_opt, f);
  CHECK(res.base.cost == doctest::Approx(integral(uV) + cfg.k * integral(res.base.V_opt)).epsilon(1e-8));

  std::size_t mixed = 0;
  for (std::size_t n : g->interior_nodes()) mixed += (res.base.V_opt[n] != cfg.alpha && res.base.V_opt[n] != cfg.beta);
  CHECK(mixed == 0);
  CHECK(res.transition_fraction == 0.0);
  ScalarField beta_set(g);
  for (std::size_t n : g->interior_nodes()) beta_set.set(n, res.base.V_opt[n] == cfg.beta ? 1.0 : 0.0);
  CHECK(res.perimeter == doctest::Approx(perimeter(beta_set)));
  CHECK(res.beta_area == doctest::Approx(set_area(beta_set)));

  // Cost histories never increase.
  for (std::size_t k = 1; k < res.cost_history.size(); ++k) CHECK(res.cost_history[k] <= res.cost_history[k - 1]);
}
