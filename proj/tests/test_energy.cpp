#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ellopt/energy.hpp"
#include "ellopt/opt_coefficient.hpp"
#include "ellopt/opt_potential.hpp"
#include "ellopt/opt_source.hpp"

using namespace ellopt;

namespace {

Vec central_gradient(const GradientEnergy& E, const Vec& u, double d) {
  Vec fd(u.size());
  Vec probe = u;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    probe[i] = u[i] + d;
    const double ep = E.value(probe);
    probe[i] = u[i] - d;
    const double em = E.value(probe);
    probe[i] = u[i];
    fd[i] = (ep - em) / (2.0 * d);
  }
  return fd;
}

template <class F>
Eigen::MatrixXd central_jacobian(F&& r, const Vec& u, double d) {
  Eigen::MatrixXd J(u.size(), u.size());
  Vec probe = u;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    probe[j] = u[j] + d;
    const Vec rp = r(probe);
    probe[j] = u[j] - d;
    const Vec rm = r(probe);
    probe[j] = u[j];
    J.col(j) = (rp - rm) / (2.0 * d);
  }
  return J;
}

// 8 x 8 unknowns.
GridPtr small_square() { return build_grid(UnitSquare{}, 1.0 / 9.0); }

struct Named {
  std::string name;
  GradientEnergy energy;
  double amplitude;  ///< scale of the random fields
};

std::vector<Named> all_energies(const GridPtr& g) {
  const double eps = 1e-2;
  const Vec load = Vec::Constant(static_cast<Eigen::Index>(g->num_interior()), 1.0);
  const auto f = ScalarField::from_function(g, [](Point2 p) { return 1.0 + p.x * p.y; });
  return {
      {"power conjugate p = 2", GradientEnergy(g, regularized_power_conjugate(2.0, eps), {}, load), 0.1},
      {"power conjugate p = 3", GradientEnergy(g, regularized_power_conjugate(3.0, eps), {}, load), 0.1},
      {"two-phase conjugate", GradientEnergy(g, smoothed_two_phase_conjugate(1.0, 2.0, eps), {}, load), 0.1},
      {"compliance potential, quadratic", compliance_potential_energy(f, Quadratic{}), 1.0},
      {"compliance potential, power 3", compliance_potential_energy(f, PowerOverP{3.0}), 1.0},
      {"threshold problem", threshold_energy(g, 0.0, 1.0, 0.05, eps * 0.05), 0.1},
  };
}

}  // namespace

TEST_CASE("every discrete energy has a consistent gradient") {
  const auto g = small_square();
  REQUIRE(g->num_interior() == 64);
  std::mt19937_64 rng(42);
  for (const Named& e : all_energies(g)) {
    CAPTURE(e.name);
    std::uniform_real_distribution<double> U(-e.amplitude, e.amplitude);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      Vec u(64);
      for (auto& x : u) x = U(rng);
      const Vec grad = e.energy.gradient(u);
      const Vec fd = central_gradient(e.energy, u, 1e-6);
      worst = std::max(worst, (grad - fd).norm() / grad.norm());
    }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("Hessians match differences of the gradient") {
  const auto g = small_square();
  std::mt19937_64 rng(5);
  for (const Named& e : all_energies(g)) {
    CAPTURE(e.name);
    std::uniform_real_distribution<double> U(-e.amplitude, e.amplitude);
    Vec u(64);
    for (auto& x : u) x = U(rng);
    const Eigen::MatrixXd H = Eigen::MatrixXd(e.energy.hessian(u));
    const Eigen::MatrixXd fd = central_jacobian([&](const Vec& v) { return e.energy.gradient(v); }, u, 1e-6);
    CHECK((H - fd).norm() <= 1e-5 * H.norm());
    CHECK((H - H.transpose()).norm() <= 1e-12 * H.norm());
  }
}

TEST_CASE("extended Jacobian matches differences of the extended residual") {
  const auto g = build_grid(Disk{1.0, {}}, 1.0 / 6.0);
  const Vec load = Vec::Constant(static_cast<Eigen::Index>(g->num_interior()), 1.0);
  const GradientEnergy E(g, regularized_power_conjugate(2.0, 1e-2), {}, load);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 0.3);
  Vec u(static_cast<Eigen::Index>(g->num_interior()));
  for (auto& x : u) x = U(rng);
  const Eigen::MatrixXd J = Eigen::MatrixXd(E.extended_jacobian(u));
  const Eigen::MatrixXd fd = central_jacobian([&](const Vec& v) { return E.extended_residual(v); }, u, 1e-6);
  CHECK((J - fd).norm() <= 1e-6 * J.norm());
  // The ghost columns break the symmetry of the staircase Hessian.
  CHECK((J - J.transpose()).norm() > 1e-6 * J.norm());
}

TEST_CASE("without ghost terms the extended residual is the gradient") {
  const auto g = build_grid(UnitSquare{}, 1.0 / 12.0);
  const Vec load = Vec::Constant(static_cast<Eigen::Index>(g->num_interior()), 1.0);
  const GradientEnergy E(g, regularized_power_conjugate(3.0, 1e-2), {}, load);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Vec u(static_cast<Eigen::Index>(g->num_interior()));
  for (auto& x : u) x = U(rng);
  CHECK((E.extended_residual(u) - E.gradient(u)).norm() <= 1e-14 * E.gradient(u).norm());
}

TEST_CASE("Newton energies never increase") {
  const auto g = build_grid(Disk{1.0, {}}, 1.0 / 16.0);
  const Vec load = Vec::Constant(static_cast<Eigen::Index>(g->num_interior()), 1.0);
  const GradientEnergy E(g, regularized_power_conjugate(2.0, 1e-3), {}, load);
  Vec u = Vec::Zero(load.size());
  std::vector<double> hist;
  const double h2 = g->h() * g->h();
  const auto rep = minimize_newton(E, u, {.tol = 1e-10, .gradient_scale = h2 * load.norm()}, &hist);
  CHECK(rep.converged);
  REQUIRE(hist.size() >= 2);
  CHECK(hist.front() < 0.0);
  for (std::size_t k = 1; k < hist.size(); ++k) CHECK(hist[k] <= hist[k - 1] + 1e-13 * std::abs(hist[k - 1]));
  CHECK(E.gradient(u).norm() <= 1e-10 * h2 * load.norm());
}

TEST_CASE("ghost correction recovers second order on the disk") {
  // -Lap u = 1 on the unit disk: u = (1 - r^2) / 4.
  const Profile half{[](double t) { return 0.5 * t; }, [](double) { return 0.5; }, [](double) { return 0.0; }};
  double stair[2], ghost[2];
  for (int k = 0; k < 2; ++k) {
    const auto g = build_grid(Disk{1.0, {}}, k == 0 ? 1.0 / 16.0 : 1.0 / 32.0);
    const Vec load = Vec::Constant(static_cast<Eigen::Index>(g->num_interior()), 1.0);
    const GradientEnergy E(g, half, {}, load);
    const double scale = g->h() * g->h() * load.norm();
    Vec u = Vec::Zero(load.size());
    REQUIRE(minimize_newton(E, u, {.tol = 1e-12, .gradient_scale = scale}).converged);
    Vec w = u;
    REQUIRE(solve_extended(E, w, {.tol = 1e-12, .gradient_scale = scale}).converged);
    stair[k] = ghost[k] = 0.0;
    for (std::size_t q = 0; q < g->num_interior(); ++q) {
      const Point2 p = g->position(g->interior_nodes()[q]);
      const double ref = 0.25 * (1.0 - p.x * p.x - p.y * p.y);
      stair[k] = std::max(stair[k], std::abs(u[static_cast<Eigen::Index>(q)] - ref));
      ghost[k] = std::max(ghost[k], std::abs(w[static_cast<Eigen::Index>(q)] - ref));
    }
  }
  CAPTURE(stair[0]);
  CAPTURE(stair[1]);
  CAPTURE(ghost[0]);
  CAPTURE(ghost[1]);
  CHECK(ghost[1] < 0.2 * stair[1]);
  CHECK(ghost[0] / ghost[1] > 3.0);
}

TEST_CASE("library gradient check agrees with the test oracle") {
  const auto g = small_square();
  const Vec load = Vec::Constant(64, 1.0);
  const GradientEnergy E(g, regularized_power_conjugate(2.0, 1e-2), {}, load);
  Vec u = Vec::LinSpaced(64, -0.1, 0.2);
  CHECK(gradient_check(E, u) <= 1e-6);
}
