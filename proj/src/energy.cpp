#include "ellopt/energy.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/IterativeLinearSolvers>
#include <array>
#include <cmath>

namespace ellopt {

namespace {

// Local corner layout (0:(i,j) 1:(i+1,j) 2:(i,j+1) 3:(i+1,j+1)); each corner
// gradient takes its x-difference from one horizontal edge and its
// y-difference from one vertical edge.
constexpr std::array<std::array<int, 4>, 4> kCornerEdges{{
    {0, 1, 0, 2},
    {0, 1, 1, 3},
    {2, 3, 0, 2},
    {2, 3, 1, 3},
}};

}  // namespace

GradientEnergy::GradientEnergy(GridPtr grid, Profile cell_density, Profile nodal_potential, Vec load)
    : grid_(std::move(grid)), phi_(std::move(cell_density)), potential_(std::move(nodal_potential)),
      load_(std::move(load)) {
  if (static_cast<std::size_t>(load_.size()) != grid_->num_interior()) {
    throw std::invalid_argument("GradientEnergy: load size mismatch");
  }
}

// visit(nodes, dofs, corner, dx, dy). Masked corners read zero, or their ghost value
// when `extended`.
template <class Visit>
void GradientEnergy::for_each_corner(const Vec& u, Visit&& visit, bool extended) const {
  const Grid& g = *grid_;
  const double inv_h = 1.0 / g.h();
  for (std::size_t c : g.active_cells()) {
    const auto nodes = g.cell_nodes(c);
    std::array<long, 4> dofs{};
    std::array<double, 4> vals{};
    for (int k = 0; k < 4; ++k) {
      dofs[k] = g.dof(nodes[k]);
      vals[k] = dofs[k] >= 0 ? u[dofs[k]] : 0.0;
      if (extended && dofs[k] < 0) {
        for (const auto& t : g.ghost_terms(nodes[k])) vals[k] += t.weight * u[t.dof];
      }
    }
    for (int corner = 0; corner < 4; ++corner) {
      const auto& e = kCornerEdges[corner];
      const double dx = (vals[e[1]] - vals[e[0]]) * inv_h;
      const double dy = (vals[e[3]] - vals[e[2]]) * inv_h;
      visit(nodes, dofs, corner, dx, dy);
    }
  }
}

double GradientEnergy::value(const Vec& u) const {
  const double h2 = grid_->h() * grid_->h();
  double cells = 0.0;
  for_each_corner(
      u, [&](const auto&, const auto&, int, double dx, double dy) { cells += phi_.value(dx * dx + dy * dy); }, false);
  double nodal = 0.0;
  if (potential_.value) {
    for (Eigen::Index i = 0; i < u.size(); ++i) nodal += potential_.value(u[i]);
  }
  return h2 * (0.25 * cells + nodal - load_.dot(u));
}

Vec GradientEnergy::gradient(const Vec& u) const { return gradient_impl(u, false); }

Vec GradientEnergy::extended_residual(const Vec& u) const { return gradient_impl(u, true); }

Vec GradientEnergy::gradient_impl(const Vec& u, bool extended) const {
  const double h2 = grid_->h() * grid_->h();
  const double inv_h = 1.0 / grid_->h();
  Vec grad = Vec::Zero(u.size());
  for_each_corner(u, [&](const auto&, const std::array<long, 4>& dofs, int corner, double dx, double dy) {
    const auto& e = kCornerEdges[corner];
    const double w = 0.25 * h2 * phi_.d1(dx * dx + dy * dy) * 2.0 * inv_h;
    auto add = [&](int local, double v) {
      if (dofs[local] >= 0) grad[dofs[local]] += v;
    };
    add(e[1], w * dx);
    add(e[0], -w * dx);
    add(e[3], w * dy);
    add(e[2], -w * dy);
  }, extended);
  if (potential_.d1) {
    for (Eigen::Index i = 0; i < u.size(); ++i) grad[i] += h2 * potential_.d1(u[i]);
  }
  grad -= h2 * load_;
  return grad;
}

SparseMatrix GradientEnergy::hessian(const Vec& u) const { return hessian_impl(u, false); }

SparseMatrix GradientEnergy::extended_jacobian(const Vec& u) const { return hessian_impl(u, true); }

// With `extended`, columns of masked corners are expanded through their ghost
// terms; rows stay restricted to the unknowns, so the result is not symmetric.
SparseMatrix GradientEnergy::hessian_impl(const Vec& u, bool extended) const {
  const double h2 = grid_->h() * grid_->h();
  const double inv_h = 1.0 / grid_->h();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(grid_->active_cells().size() * 36);
  const Grid& g = *grid_;
  for_each_corner(u, [&](const std::array<std::size_t, 4>& nodes, const std::array<long, 4>& dofs, int corner,
                         double dx, double dy) {
    const auto& e = kCornerEdges[corner];
    const double t = dx * dx + dy * dy;
    const double d1 = phi_.d1(t);
    const double d2 = phi_.d2(t);
    // Derivative rows of dx and dy w.r.t. the four local values.
    std::array<double, 4> Dx{}, Dy{};
    Dx[e[1]] += inv_h;
    Dx[e[0]] -= inv_h;
    Dy[e[3]] += inv_h;
    Dy[e[2]] -= inv_h;
    std::array<double, 4> G{};
    for (int k = 0; k < 4; ++k) G[k] = 2.0 * (dx * Dx[k] + dy * Dy[k]);
    const double w = 0.25 * h2;
    for (int a = 0; a < 4; ++a) {
      if (dofs[a] < 0) continue;
      for (int b = 0; b < 4; ++b) {
        const double v = w * (d2 * G[a] * G[b] + 2.0 * d1 * (Dx[a] * Dx[b] + Dy[a] * Dy[b]));
        if (dofs[b] >= 0) {
          trip.emplace_back(dofs[a], dofs[b], v);
        } else if (extended) {
          for (const auto& term : g.ghost_terms(nodes[b])) trip.emplace_back(dofs[a], term.dof, v * term.weight);
        }
      }
    }
  }, extended);
  // Explicit zeros keep the sparsity pattern independent of u, so a symbolic
  // factorization can be reused across Newton steps.
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    trip.emplace_back(i, i, potential_.d2 ? h2 * potential_.d2(u[i]) : 0.0);
  }
  const auto N = u.size();
  SparseMatrix H(N, N);
  H.setFromTriplets(trip.begin(), trip.end());
  H.makeCompressed();
  return H;
}

SolveReport minimize_newton(const GradientEnergy& energy, Vec& u, const NewtonOptions& options,
                            std::vector<double>* energies) {
  SolveReport rep;
  const double target = options.tol * options.gradient_scale;
  double E = energy.value(u);
  Vec grad = energy.gradient(u);
  double gnorm = grad.norm();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool pattern_ready = false;

  while (gnorm > target && rep.iterations < options.max_iterations) {
    Eigen::SparseMatrix<double> H = energy.hessian(u);
    if (!pattern_ready) {
      ldlt.analyzePattern(H);
      pattern_ready = true;
    }
    Vec step;
    // Levenberg shift when the Hessian is (numerically) singular or the
    // Newton direction is not a descent direction.
    double shift = 0.0;
    const double diag_scale = H.diagonal().cwiseAbs().maxCoeff();
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::SparseMatrix<double> Hs = H;
      if (shift > 0.0) {
        for (Eigen::Index i = 0; i < Hs.rows(); ++i) Hs.coeffRef(i, i) += shift;
      }
      ldlt.factorize(Hs);
      if (ldlt.info() == Eigen::Success) {
        step = -ldlt.solve(grad);
        if (step.allFinite() && step.dot(grad) < 0.0) break;
      }
      shift = shift == 0.0 ? 1e-10 * diag_scale : shift * 100.0;
      step.resize(0);
    }
    if (step.size() == 0) step = -grad;

    const double slope = step.dot(grad);
    const double noise = 1e-13 * std::max(1.0, std::abs(E));
    double alpha = 1.0;
    bool accepted = false;
    Vec trial;
    if (-slope > noise) {
      for (int ls = 0; ls < 60; ++ls) {
        trial = u + alpha * step;
        if (energy.value(trial) <= E + 1e-4 * alpha * slope) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
    }
    // Predicted decrease below the roundoff of E: Armijo is meaningless, so
    // backtrack on the gradient norm instead, without letting E rise beyond
    // that roundoff.
    for (alpha = 1.0; !accepted && alpha > 1e-4; alpha *= 0.5) {
      trial = u + alpha * step;
      accepted = energy.gradient(trial).norm() < gnorm && energy.value(trial) <= E + noise;
    }
    if (!accepted) {
      rep.message = "line-search failure";
      break;
    }
    u = std::move(trial);
    E = energy.value(u);
    grad = energy.gradient(u);
    gnorm = grad.norm();
    ++rep.iterations;
    if (energies) energies->push_back(E);
  }
  rep.objective = E;
  rep.final_residual = options.gradient_scale > 0.0 ? gnorm / options.gradient_scale : gnorm;
  rep.converged = gnorm <= target;
  if (!rep.converged && rep.message.empty()) rep.message = "Newton iteration cap reached";
  return rep;
}

CellField GradientEnergy::extended_gradient_sq(const Vec& u) const {
  CellField out(grid_);
  const Grid& g = *grid_;
  for_each_corner(u, [&](const std::array<std::size_t, 4>& nodes, const auto&, int, double dx, double dy) {
    // nodes[0] identifies the cell: it is its lower-left corner.
    out[g.cell(g.node_i(nodes[0]), g.node_j(nodes[0]))] += 0.25 * (dx * dx + dy * dy);
  }, true);
  return out;
}

SolveReport solve_extended(const GradientEnergy& energy, Vec& u, const NewtonOptions& options) {
  SolveReport rep;
  const double target = options.tol * options.gradient_scale;
  Vec r = energy.extended_residual(u);
  double rnorm = r.norm();
  Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> krylov;
  krylov.setTolerance(1e-13);
  krylov.setMaxIterations(2000);

  while (rnorm > target && rep.iterations < options.max_iterations) {
    SparseMatrix J = energy.extended_jacobian(u);
    J.prune(0.0);
    krylov.compute(J);
    const Vec step = -krylov.solve(r);
    if (krylov.info() != Eigen::Success || !step.allFinite()) {
      rep.message = "Jacobian solve failed";
      break;
    }
    bool accepted = false;
    Vec trial;
    Vec r_trial;
    for (double alpha = 1.0; alpha > 1e-6; alpha *= 0.5) {
      trial = u + alpha * step;
      r_trial = energy.extended_residual(trial);
      if (r_trial.norm() < (1.0 - 1e-4 * alpha) * rnorm) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      rep.message = "line-search failure";
      break;
    }
    u = std::move(trial);
    r = std::move(r_trial);
    rnorm = r.norm();
    ++rep.iterations;
  }
  rep.final_residual = options.gradient_scale > 0.0 ? rnorm / options.gradient_scale : rnorm;
  rep.converged = rnorm <= target;
  if (!rep.converged && rep.message.empty()) rep.message = "Newton iteration cap reached";
  return rep;
}

double gradient_check(const GradientEnergy& energy, const Vec& u, double step) {
  const Vec g = energy.gradient(u);
  Vec fd(u.size());
  Vec probe = u;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double ep = energy.value(probe);
    probe[i] = orig - step;
    const double em = energy.value(probe);
    probe[i] = orig;
    fd[i] = (ep - em) / (2.0 * step);
  }
  const double scale = g.norm();
  return scale > 0.0 ? (g - fd).norm() / scale : (g - fd).norm();
}

}  // namespace ellopt
