#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ellopt/convex.hpp"
#include "ellopt/opt_coefficient.hpp"

using namespace ellopt;

namespace {

double radius(Point2 p) { return std::hypot(p.x, p.y); }

}  // namespace

TEST_CASE("power-law coefficient on the disk follows the radial solution") {
  const double p = 2.0;
  const auto g = build_grid(Disk{1.0, {}}, 1.0 / 32.0);
  const auto res = solve_auxiliary_power(g, ScalarField::constant(g, 1.0), p);
  CHECK(res.report.converged);
  // Euler-Lagrange equation -div(|grad u|^2 grad u) = 1, radial: r |u'|^3 = r^2 / 2,
  // so |u'| = (r/2)^{1/3} and u = (3/4) 2^{-1/3} (1 - r^{4/3}).
  const double C = 0.75 * std::cbrt(0.5);
  double uerr = 0.0;
  for (std::size_t n : g->interior_nodes()) {
    const double ref = C * (1.0 - std::pow(radius(g->position(n)), 4.0 / 3.0));
    uerr = std::max(uerr, std::abs(res.u_bar[n] - ref) / C);
  }
  CHECK(uerr < 0.01);
  // a_opt = (psi*)'(|grad u|^2) = |grad u|^2 = (r/2)^{2/3}.
  double aerr = 0.0;
  for (std::size_t c : g->active_cells()) {
    const double r = radius(g->cell_center(c));
    if (!g->cell_is_interior(c) || r < 0.1) continue;
    const double ref = std::pow(r / 2.0, 2.0 / 3.0);
    aerr = std::max(aerr, std::abs(res.a_opt[c] - ref) / ref);
  }
  CHECK(aerr < 0.05);
  CHECK(res.max_fenchel_residual < 1e-8);
}

TEST_CASE("auxiliary energy is minus the optimal cost") {
  const auto g = build_grid(UnitSquare{}, 1.0 / 24.0);
  const auto f = ScalarField::constant(g, 1.0);
  ContinuationOptions opt;
  opt.boundary_correction = false;
  const auto res = solve_auxiliary_power(g, f, 2.0, opt);
  REQUIRE(res.report.converged);
  CHECK(res.energy < 0.0);
  const auto comp = compliance(res.a_opt, f);
  const double psi_sum = [&] {
    double s = 0.0;
    for (std::size_t c : g->active_cells()) s += std::pow(res.a_opt[c], 2.0) / 2.0;
    return g->h() * g->h() * s;
  }();
  // Duality: C(a_opt) + int psi(a_opt) = -E, up to the difference between the
  // corner-gradient energy and the harmonic-mean diffusion stencil.
  CHECK(comp.compliance + psi_sum == doctest::Approx(-res.energy).epsilon(0.02));
}

TEST_CASE("compliance of a constant coefficient scales inversely") {
  const auto g = build_grid(Disk{1.0, {}}, 1.0 / 16.0);
  const auto f = ScalarField::constant(g, 1.0);
  const auto c1 = compliance(CellField(g, 1.0), f);
  const auto c2 = compliance(CellField(g, 2.0), f);
  CHECK(c2.compliance == doctest::Approx(0.5 * c1.compliance).epsilon(1e-9));
  CHECK(c1.energy == doctest::Approx(-0.5 * c1.compliance).epsilon(1e-9));
  // Continuum value int (1 - r^2)/4 = pi/8 within the staircase error.
  CHECK(std::abs(c1.compliance - std::numbers::pi / 8.0) < 0.05);
  CellField zero(g, 1.0);
  zero[g->active_cells()[0]] = 0.0;
  CHECK_THROWS_AS(compliance(zero, f), std::invalid_argument);
}

TEST_CASE("point loads go to the nearest node with weight 1/h^2") {
  const double h = 1.0 / 8.0;
  const auto g = build_grid(Disk{1.0, {}}, h);
  const Vec load = load_vector(g, PointMass{{0.02, -0.01}, 2.0});
  CHECK(load.sum() == doctest::Approx(2.0 / (h * h)));
  const long d = g->dof(g->nearest_node({0.0, 0.0}));
  CHECK(load[d] == doctest::Approx(2.0 / (h * h)));
}

TEST_CASE("two-phase profile is the C1 smoothing of the conjugate") {
  const double a = 1.0, b = 2.0, eps = 1e-2;
  const Profile P = smoothed_two_phase_conjugate(a, b, eps);
  // psi(s) = s on [alpha, beta]: psi*(t) = alpha (t - 1) for t <= 1, beta (t - 1) above.
  CHECK(P.value(0.5) == doctest::Approx(-0.5 * a));
  CHECK(P.value(1.5) == doctest::Approx(0.5 * b));
  CHECK(P.d1(0.5) == doctest::Approx(a));
  CHECK(P.d1(1.5) == doctest::Approx(b));
  for (double t : {0.3, 1.7}) CHECK(P.value(t) == doctest::Approx(conjugate(LinearOnInterval{a, b, 1.0}, t)));
  for (double t : {1.0 - eps, 1.0 + eps}) {
    CHECK(P.value(t - 1e-9) == doctest::Approx(P.value(t + 1e-9)).epsilon(1e-8));
    CHECK(P.d1(t - 1e-9) == doctest::Approx(P.d1(t + 1e-9)).epsilon(1e-6));
  }
  CHECK(P.value(1.0) >= 0.0);
  CHECK(P.value(1.0) <= 0.5 * (b - a) * eps);
}

TEST_CASE("two-phase disk: relaxed annulus with unit gradient") {
  // f = 4, alpha = 1, beta = 2. Radially a |u'| = 2r; a = 1 gives |u'| = 2r up
  // to r = 1/2, and beyond it |u'| = 1 with a = 2r in [1, 2]. Hence
  // u = 3/4 - r^2 for r < 1/2 and u = 1 - r for r >= 1/2.
  const auto g = build_grid(Disk{1.0, {}}, 1.0 / 32.0);
  const auto res = solve_two_phase(ScalarField::constant(g, 4.0), 1.0, 2.0);
  CHECK(res.base.report.converged);
  double err = 0.0;
  for (std::size_t n : g->interior_nodes()) {
    const double r = radius(g->position(n));
    const double ref = r < 0.5 ? 0.75 - r * r : 1.0 - r;
    err = std::max(err, std::abs(res.base.u_bar[n] - ref));
  }
  CHECK(err < 0.03);
  for (std::size_t c : g->active_cells()) {
    const double v = res.base.a_opt[c];
    CHECK((v == 1.0 || v == 2.0));
    if (radius(g->cell_center(c)) < 0.4) CHECK(v == 1.0);
  }
  // Continuum optimum of int psi*(|grad u|^2) - 2 f u: the integrand is
  // 12 r^2 - 7 for r < 1/2 and -8 (1 - r) beyond.
  const double pi = std::numbers::pi;
  const double inner = 2.0 * pi * (3.0 / 16.0 - 7.0 / 8.0);
  const double outer = -16.0 * pi * ((1.0 / 2.0 - 1.0 / 3.0) - (1.0 / 8.0 - 1.0 / 24.0));
  CHECK(res.extrapolated_energy == doctest::Approx(inner + outer).epsilon(0.03));
  CHECK(res.base.energy == doctest::Approx(inner + outer).epsilon(0.03));
}
