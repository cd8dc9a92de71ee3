#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ellopt/linsolve.hpp"

using namespace ellopt;

namespace {

constexpr double pi = std::numbers::pi;

ScalarField random_field(const GridPtr& g, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  return ScalarField::from_function(g, [&](Point2) { return N(rng); });
}

double rel_l2(const ScalarField& a, const ScalarField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t n : a.grid().interior_nodes()) {
    num += (a[n] - b[n]) * (a[n] - b[n]);
    den += b[n] * b[n];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("Laplacian rows are the 5-point stencil") {
  const double h = 0.125;
  const auto g = build_grid(UnitSquare{}, h);
  const auto L = assemble_laplacian(g);
  const std::size_t c = g->node(g->node_i(g->nearest_node({0.5, 0.5})), g->node_j(g->nearest_node({0.5, 0.5})));
  const long r = g->dof(c);
  REQUIRE(r >= 0);
  double diag = 0.0, off = 0.0;
  int count = 0;
  for (SparseMatrix::InnerIterator it(L.matrix(), r); it; ++it) {
    if (it.col() == r) {
      diag = it.value();
    } else {
      off += it.value();
      ++count;
    }
  }
  CHECK(diag == doctest::Approx(4.0 / (h * h)));
  CHECK(off == doctest::Approx(-4.0 / (h * h)));
  CHECK(count == 4);
  const SparseMatrix At = L.matrix().transpose();
  CHECK((L.matrix() - At).norm() == doctest::Approx(0.0));
}

TEST_CASE("unit coefficient diffusion equals the Laplacian") {
  const auto g = build_grid(Disk{1.0, {}}, 1.0 / 16.0);
  const auto A = assemble_diffusion(CellField(g, 1.0));
  const auto L = assemble_laplacian(g);
  CHECK((A.matrix() - L.matrix()).norm() <= 1e-9 * L.matrix().norm());
  CellField bad(g, 1.0);
  bad[g->active_cells()[0]] = -1.0;
  CHECK_THROWS_AS(assemble_diffusion(bad), std::invalid_argument);
  CHECK_THROWS_AS(assemble_schrodinger(ScalarField::constant(g, -1.0)), std::invalid_argument);
}

TEST_CASE("discrete sine mode is an exact eigenvector") {
  const double h = 1.0 / 16.0;
  const auto g = build_grid(UnitSquare{}, h);
  const auto phi = ScalarField::from_function(g, [](Point2 p) { return std::sin(pi * p.x) * std::sin(pi * p.y); });
  const double mu = 8.0 / (h * h) * std::pow(std::sin(pi * h / 2.0), 2);
  const auto Lphi = assemble_laplacian(g).apply(phi);
  for (std::size_t n : g->interior_nodes()) CHECK(Lphi[n] == doctest::Approx(mu * phi[n]).epsilon(1e-10));
}

TEST_CASE("all solve methods agree and meet the tolerance") {
  std::mt19937_64 rng(7);
  const auto g = build_grid(Ellipse{2.0, 1.0}, 1.0 / 16.0);
  const auto f = random_field(g, rng);
  const auto A = assemble_schrodinger(ScalarField::constant(g, 2.0));
  const auto ref = solve(A, f, {.tol = 1e-12, .method = SolveMethod::cholesky});
  REQUIRE(ref.u);
  CHECK(ref.report.converged);
  for (SolveMethod m : {SolveMethod::cg, SolveMethod::jacobi_pcg}) {
    const auto out = solve(A, f, {.tol = 1e-11, .method = m});
    REQUIRE(out.u);
    CHECK(out.report.converged);
    CHECK(out.report.final_residual <= 1e-11);
    CHECK(rel_l2(*out.u, *ref.u) < 1e-8);
  }
  // Residual of the direct solve, computed independently.
  const auto r = A.apply(*ref.u);
  double num = 0.0, den = 0.0;
  for (std::size_t n : g->interior_nodes()) {
    num += (r[n] - f[n]) * (r[n] - f[n]);
    den += f[n] * f[n];
  }
  CHECK(std::sqrt(num / den) < 1e-10);
}

TEST_CASE("an iteration cap reports non-convergence") {
  const auto g = build_grid(UnitSquare{}, 1.0 / 32.0);
  const auto out = solve(assemble_laplacian(g), ScalarField::constant(g, 1.0),
                         {.tol = 1e-12, .method = SolveMethod::cg, .max_iterations = 3});
  CHECK_FALSE(out.report.converged);
  CHECK_FALSE(out.u.has_value());
}

TEST_CASE("manufactured Poisson solution converges at second order") {
  double errs[2];
  for (int k = 0; k < 2; ++k) {
    const double h = k == 0 ? 1.0 / 16.0 : 1.0 / 32.0;
    const auto g = build_grid(UnitSquare{}, h);
    auto exact = [](Point2 p) { return std::sin(pi * p.x) * std::sin(2.0 * pi * p.y); };
    const auto f = ScalarField::from_function(g, [&](Point2 p) { return 5.0 * pi * pi * exact(p); });
    const auto u = solve(assemble_laplacian(g), f, {.tol = 1e-12, .method = SolveMethod::cholesky});
    REQUIRE(u.u);
    double e = 0.0;
    for (std::size_t n : g->interior_nodes()) e = std::max(e, std::abs((*u.u)[n] - exact(g->position(n))));
    errs[k] = e;
  }
  CHECK(errs[0] / errs[1] > 3.5);
  CHECK(errs[1] < 5e-3);
}

TEST_CASE("resolvent is self-adjoint on every domain") {
  std::mt19937_64 rng(11);
  for (const DomainSpec& d : {DomainSpec{UnitSquare{}}, DomainSpec{Disk{1.0, {}}}, DomainSpec{Ellipse{2.0, 1.0}}}) {
    const auto g = build_grid(d, 1.0 / 16.0);
    for (SolveMethod m : {SolveMethod::cholesky, SolveMethod::jacobi_pcg}) {
      const double tol = 1e-10;
      const Resolvent R(assemble_laplacian(g), {.tol = tol, .method = m});
      for (int k = 0; k < 5; ++k) {
        const auto f = random_field(g, rng), q = random_field(g, rng);
        const auto Rf = R.apply(f), Rq = R.apply(q);
        const double a = inner(q, Rf), b = inner(f, Rq);
        const double scale = std::max(std::sqrt(inner(q, q) * inner(Rf, Rf)), std::sqrt(inner(f, f) * inner(Rq, Rq)));
        CHECK(std::abs(a - b) <= 10.0 * tol * scale);
      }
    }
  }
}

TEST_CASE("smallest eigenpair of the square matches the discrete formula") {
  const double h = 1.0 / 32.0;
  const auto g = build_grid(UnitSquare{}, h);
  const auto eig = smallest_eigenpair(g, 1e-10);
  const double mu = 8.0 / (h * h) * std::pow(std::sin(pi * h / 2.0), 2);
  CHECK(eig.mu == doctest::Approx(mu).epsilon(1e-8));
  CHECK(inner(eig.phi, eig.phi) == doctest::Approx(1.0));
  for (std::size_t n : g->interior_nodes()) CHECK(eig.phi[n] >= 0.0);
}

TEST_CASE("a constant potential shifts the spectrum") {
  const auto g = build_grid(Disk{1.0, {}}, 1.0 / 16.0);
  const double mu0 = smallest_eigenpair(g, 1e-10).mu;
  const double mu1 = smallest_eigenpair(assemble_schrodinger(ScalarField::constant(g, 3.0)), 1e-10).mu;
  CHECK(mu1 == doctest::Approx(mu0 + 3.0).epsilon(1e-8));
}
