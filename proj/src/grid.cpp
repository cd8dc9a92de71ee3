#include "ellopt/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ellopt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("domain: ") + what + " must be > 0");
  }
}

}  // namespace

void validate(const DomainSpec& domain) {
  std::visit(overloaded{
                 [](const UnitSquare&) {},
                 [](const Rectangle& r) {
                   require_positive(r.lx, "lx");
                   require_positive(r.ly, "ly");
                 },
                 [](const Disk& d) { require_positive(d.r, "r"); },
                 [](const Ellipse& e) {
                   require_positive(e.a, "a");
                   require_positive(e.b, "b");
                 },
             },
             domain);
}

bool contains(const DomainSpec& domain, Point2 p) {
  return std::visit(overloaded{
                        [&](const UnitSquare&) { return p.x > 0.0 && p.x < 1.0 && p.y > 0.0 && p.y < 1.0; },
                        [&](const Rectangle& r) {
                          if (r.centered) {
                            return std::abs(p.x) < 0.5 * r.lx && std::abs(p.y) < 0.5 * r.ly;
                          }
                          return p.x > 0.0 && p.x < r.lx && p.y > 0.0 && p.y < r.ly;
                        },
                        [&](const Disk& d) {
                          const double dx = p.x - d.center.x;
                          const double dy = p.y - d.center.y;
                          return dx * dx + dy * dy < d.r * d.r;
                        },
                        [&](const Ellipse& e) {
                          return (p.x * p.x) / (e.a * e.a) + (p.y * p.y) / (e.b * e.b) < 1.0;
                        },
                    },
                    domain);
}

BoundingBox bounding_box(const DomainSpec& domain) {
  return std::visit(overloaded{
                        [](const UnitSquare&) { return BoundingBox{{0, 0}, {1, 1}}; },
                        [](const Rectangle& r) {
                          if (r.centered) {
                            return BoundingBox{{-0.5 * r.lx, -0.5 * r.ly}, {0.5 * r.lx, 0.5 * r.ly}};
                          }
                          return BoundingBox{{0, 0}, {r.lx, r.ly}};
                        },
                        [](const Disk& d) {
                          return BoundingBox{{d.center.x - d.r, d.center.y - d.r},
                                             {d.center.x + d.r, d.center.y + d.r}};
                        },
                        [](const Ellipse& e) { return BoundingBox{{-e.a, -e.b}, {e.a, e.b}}; },
                    },
                    domain);
}

double area(const DomainSpec& domain) {
  return std::visit(overloaded{
                        [](const UnitSquare&) { return 1.0; },
                        [](const Rectangle& r) { return r.lx * r.ly; },
                        [](const Disk& d) { return std::numbers::pi * d.r * d.r; },
                        [](const Ellipse& e) { return std::numbers::pi * e.a * e.b; },
                    },
                    domain);
}

std::string describe(const DomainSpec& domain) {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const UnitSquare&) { os << "unit_square"; },
                 [&](const Rectangle& r) {
                   os << "rectangle(" << r.lx << "x" << r.ly << (r.centered ? ", centered" : "") << ")";
                 },
                 [&](const Disk& d) { os << "disk(r=" << d.r << ", c=(" << d.center.x << "," << d.center.y << "))"; },
                 [&](const Ellipse& e) { os << "ellipse(a=" << e.a << ", b=" << e.b << ")"; },
             },
             domain);
  return os.str();
}

// --- Grid -----------------------------------------------------------------

Grid::Grid(DomainSpec domain, double h) : domain_(std::move(domain)), h_(h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("grid: h must be > 0");
  validate(domain_);
  const BoundingBox box = bounding_box(domain_);
  i0_ = static_cast<long>(std::floor(box.lo.x / h));
  j0_ = static_cast<long>(std::floor(box.lo.y / h));
  const long i1 = static_cast<long>(std::ceil(box.hi.x / h));
  const long j1 = static_cast<long>(std::ceil(box.hi.y / h));
  nx_ = static_cast<std::size_t>(i1 - i0_ + 1);
  ny_ = static_cast<std::size_t>(j1 - j0_ + 1);

  dof_.assign(num_nodes(), -1);
  for (std::size_t j = 0; j < ny_; ++j) {
    for (std::size_t i = 0; i < nx_; ++i) {
      if (contains(domain_, position(i, j))) {
        const std::size_t n = node(i, j);
        // The lattice ring is on or outside the bounding box, hence never interior.
        if (i == 0 || j == 0 || i + 1 == nx_ || j + 1 == ny_) continue;
        dof_[n] = static_cast<long>(interior_nodes_.size());
        interior_nodes_.push_back(n);
      }
    }
  }

  cell_active_.assign(num_cells(), 0);
  for (std::size_t c = 0; c < num_cells(); ++c) {
    for (std::size_t n : cell_nodes(c)) {
      if (is_interior(n)) {
        cell_active_[c] = 1;
        break;
      }
    }
    if (cell_active_[c]) active_cells_.push_back(c);
  }

  ghost_offset_.assign(num_nodes() + 1, 0);
  for (std::size_t n = 0; n < num_nodes(); ++n) {
    ghost_offset_[n] = ghost_terms_.size();
    if (is_interior(n)) continue;
    const long i = static_cast<long>(node_i(n));
    const long j = static_cast<long>(node_j(n));
    std::vector<std::size_t> from;
    auto collect = [&](std::initializer_list<std::array<long, 2>> offsets) {
      for (const auto& [di, dj] : offsets) {
        const long a = i + di;
        const long b = j + dj;
        if (a < 0 || b < 0 || a >= static_cast<long>(nx_) || b >= static_cast<long>(ny_)) continue;
        const std::size_t m = node(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
        if (is_interior(m)) from.push_back(m);
      }
    };
    collect({{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
    if (from.empty()) collect({{1, 1}, {-1, 1}, {1, -1}, {-1, -1}});
    for (std::size_t m : from) {
      const double w = (1.0 - 1.0 / boundary_fraction(m, n)) / static_cast<double>(from.size());
      if (w != 0.0) ghost_terms_.push_back({dof_[m], w});
    }
  }
  ghost_offset_[num_nodes()] = ghost_terms_.size();
}

double Grid::boundary_fraction(std::size_t from, std::size_t to) const {
  const Point2 a = position(from);
  const Point2 b = position(to);
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (contains(domain_, {a.x + mid * (b.x - a.x), a.y + mid * (b.y - a.y)}) ? lo : hi) = mid;
  }
  if (hi > 1.0 - 1e-12) return 1.0;
  return std::max(hi, min_boundary_fraction);
}

Point2 Grid::position(std::size_t n) const { return position(node_i(n), node_j(n)); }

Point2 Grid::position(std::size_t i, std::size_t j) const {
  return {static_cast<double>(i0_ + static_cast<long>(i)) * h_,
          static_cast<double>(j0_ + static_cast<long>(j)) * h_};
}

std::array<std::size_t, 4> Grid::cell_nodes(std::size_t c) const {
  const std::size_t i = c % (nx_ - 1);
  const std::size_t j = c / (nx_ - 1);
  return {node(i, j), node(i + 1, j), node(i, j + 1), node(i + 1, j + 1)};
}

Point2 Grid::cell_center(std::size_t c) const {
  const std::size_t i = c % (nx_ - 1);
  const std::size_t j = c / (nx_ - 1);
  const Point2 p = position(i, j);
  return {p.x + 0.5 * h_, p.y + 0.5 * h_};
}

bool Grid::cell_is_interior(std::size_t c) const {
  for (std::size_t n : cell_nodes(c)) {
    if (!is_interior(n)) return false;
  }
  return true;
}

std::size_t Grid::nearest_node(Point2 p) const {
  auto clamp_index = [](double t, std::size_t count) {
    const double r = std::round(t);
    if (r < 0.0) return std::size_t{0};
    return std::min(static_cast<std::size_t>(r), count - 1);
  };
  const std::size_t i = clamp_index(p.x / h_ - static_cast<double>(i0_), nx_);
  const std::size_t j = clamp_index(p.y / h_ - static_cast<double>(j0_), ny_);
  return node(i, j);
}

GridPtr build_grid(const DomainSpec& domain, double h) {
  auto grid = std::make_shared<const Grid>(domain, h);
  if (grid->num_interior() == 0) {
    throw EmptyGridError("grid: no interior node for " + describe(domain) + " at h=" + std::to_string(h));
  }
  return grid;
}

// --- Fields ---------------------------------------------------------------

ScalarField::ScalarField(GridPtr grid) : grid_(std::move(grid)), values_(grid_->num_nodes(), 0.0) {}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->num_nodes()) throw std::invalid_argument("ScalarField: size mismatch");
  for (std::size_t n = 0; n < values_.size(); ++n) {
    if (!grid_->is_interior(n)) values_[n] = 0.0;
    if (!std::isfinite(values_[n])) throw std::invalid_argument("ScalarField: non-finite value");
  }
}

ScalarField ScalarField::constant(GridPtr grid, double c) {
  return from_function(std::move(grid), [c](Point2) { return c; });
}

ScalarField ScalarField::from_function(GridPtr grid, const std::function<double(Point2)>& fn) {
  ScalarField out(grid);
  for (std::size_t n : grid->interior_nodes()) out.values_[n] = fn(grid->position(n));
  for (double v : out.values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("ScalarField: non-finite value");
  }
  return out;
}

ScalarField ScalarField::from_dofs(GridPtr grid, std::span<const double> dofs) {
  if (dofs.size() != grid->num_interior()) throw std::invalid_argument("ScalarField: dof count mismatch");
  ScalarField out(grid);
  const auto nodes = grid->interior_nodes();
  for (std::size_t k = 0; k < nodes.size(); ++k) out.values_[nodes[k]] = dofs[k];
  return out;
}

void ScalarField::set(std::size_t n, double v) {
  if (grid_->is_interior(n)) values_[n] = v;
}

std::vector<double> ScalarField::dofs() const {
  std::vector<double> out;
  out.reserve(grid_->num_interior());
  for (std::size_t n : grid_->interior_nodes()) out.push_back(values_[n]);
  return out;
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

CellField::CellField(GridPtr grid, double fill) : grid_(std::move(grid)), values_(grid_->num_cells(), fill) {}

CellField::CellField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->num_cells()) throw std::invalid_argument("CellField: size mismatch");
}

CellField CellField::from_function(GridPtr grid, const std::function<double(Point2)>& fn) {
  CellField out(grid);
  for (std::size_t c = 0; c < grid->num_cells(); ++c) out.values_[c] = fn(grid->cell_center(c));
  return out;
}

VectorField::VectorField(GridPtr grid)
    : grid_(std::move(grid)), gx_(grid_->num_cells(), 0.0), gy_(grid_->num_cells(), 0.0) {}

VectorField gradient(const ScalarField& u) {
  const Grid& g = u.grid();
  VectorField out(u.grid_ptr());
  const double h = g.h();
  for (std::size_t c : g.active_cells()) {
    const auto [n00, n10, n01, n11] = g.cell_nodes(c);
    const double gx = ((u[n10] - u[n00]) + (u[n11] - u[n01])) / (2.0 * h);
    const double gy = ((u[n01] - u[n00]) + (u[n11] - u[n10])) / (2.0 * h);
    out.set(c, gx, gy);
  }
  return out;
}

std::array<std::array<double, 2>, 4> corner_gradients(const ScalarField& u, std::size_t c) {
  const Grid& g = u.grid();
  const auto [n00, n10, n01, n11] = g.cell_nodes(c);
  const double inv_h = 1.0 / g.h();
  const double bottom = (u[n10] - u[n00]) * inv_h;
  const double top = (u[n11] - u[n01]) * inv_h;
  const double left = (u[n01] - u[n00]) * inv_h;
  const double right = (u[n11] - u[n10]) * inv_h;
  return {{{bottom, left}, {bottom, right}, {top, left}, {top, right}}};
}

CellField cell_gradient_sq(const ScalarField& u) {
  const Grid& g = u.grid();
  CellField out(u.grid_ptr());
  for (std::size_t c : g.active_cells()) {
    double acc = 0.0;
    for (const auto& gr : corner_gradients(u, c)) acc += gr[0] * gr[0] + gr[1] * gr[1];
    out[c] = 0.25 * acc;
  }
  return out;
}

double integrate(const ScalarField& u) {
  const Grid& g = u.grid();
  double acc = 0.0;
  for (std::size_t c : g.active_cells()) {
    const auto nodes = g.cell_nodes(c);
    acc += 0.25 * (u[nodes[0]] + u[nodes[1]] + u[nodes[2]] + u[nodes[3]]);
  }
  return acc * g.h() * g.h();
}

double integrate_cells(const CellField& v) {
  const Grid& g = v.grid();
  double acc = 0.0;
  for (std::size_t c : g.active_cells()) acc += v[c];
  return acc * g.h() * g.h();
}

double inner(const ScalarField& a, const ScalarField& b) {
  if (&a.grid() != &b.grid()) throw std::invalid_argument("inner: fields live on different grids");
  const Grid& g = a.grid();
  double acc = 0.0;
  for (std::size_t n : g.interior_nodes()) acc += a[n] * b[n];
  return acc * g.h() * g.h();
}

}  // namespace ellopt
