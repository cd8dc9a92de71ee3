#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ellopt {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

// --- Domains --------------------------------------------------------------

struct UnitSquare {
  friend bool operator==(const UnitSquare&, const UnitSquare&) = default;
};

/// [0,lx]x[0,ly], or [-lx/2,lx/2]x[-ly/2,ly/2] when centered.
struct Rectangle {
  double lx = 1.0;
  double ly = 1.0;
  bool centered = false;
  friend bool operator==(const Rectangle&, const Rectangle&) = default;
};

struct Disk {
  double r = 1.0;
  Point2 center{};
  friend bool operator==(const Disk&, const Disk&) = default;
};

/// x^2/a^2 + y^2/b^2 < 1, centered at the origin.
struct Ellipse {
  double a = 2.0;
  double b = 1.0;
  friend bool operator==(const Ellipse&, const Ellipse&) = default;
};

using DomainSpec = std::variant<UnitSquare, Rectangle, Disk, Ellipse>;

struct BoundingBox {
  Point2 lo;
  Point2 hi;
};

/// Throws std::invalid_argument when a length is not strictly positive.
void validate(const DomainSpec& domain);

/// Strict membership test; points on the boundary are outside.
bool contains(const DomainSpec& domain, Point2 p);

BoundingBox bounding_box(const DomainSpec& domain);

/// Exact Lebesgue measure of the continuous domain.
double area(const DomainSpec& domain);

std::string describe(const DomainSpec& domain);

class EmptyGridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- Grid -----------------------------------------------------------------

/// Uniform lattice of nodes (i*h, j*h) covering the domain's bounding box with
/// one extra layer. Nodes strictly inside the domain are unknowns ("interior");
/// all others carry the homogeneous Dirichlet value.
///
/// Cells are the lattice squares. A cell is *active* when at least one corner is
/// interior (it sees the unknowns) and *interior* when all four corners are.
class Grid {
 public:
  Grid(DomainSpec domain, double h);

  double h() const { return h_; }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t num_nodes() const { return nx_ * ny_; }
  std::size_t num_cells() const { return (nx_ - 1) * (ny_ - 1); }
  std::size_t num_interior() const { return interior_nodes_.size(); }
  const DomainSpec& domain() const { return domain_; }

  std::size_t node(std::size_t i, std::size_t j) const { return j * nx_ + i; }
  std::size_t node_i(std::size_t n) const { return n % nx_; }
  std::size_t node_j(std::size_t n) const { return n / nx_; }
  Point2 position(std::size_t n) const;
  Point2 position(std::size_t i, std::size_t j) const;

  bool is_interior(std::size_t n) const { return dof_[n] >= 0; }
  /// Index among interior nodes, or -1.
  long dof(std::size_t n) const { return dof_[n]; }
  std::span<const std::size_t> interior_nodes() const { return interior_nodes_; }

  std::size_t cell(std::size_t i, std::size_t j) const { return j * (nx_ - 1) + i; }
  /// Node ids of a cell in the order (i,j), (i+1,j), (i,j+1), (i+1,j+1).
  std::array<std::size_t, 4> cell_nodes(std::size_t c) const;
  Point2 cell_center(std::size_t c) const;
  bool cell_is_active(std::size_t c) const { return cell_active_[c] != 0; }
  bool cell_is_interior(std::size_t c) const;
  std::span<const std::size_t> active_cells() const { return active_cells_; }

  /// Nearest lattice node to p (clamped to the lattice).
  std::size_t nearest_node(Point2 p) const;

  struct GhostTerm {
    long dof;
    double weight;
  };
  /// Ghost value of a masked node as a combination of interior unknowns: the
  /// mean over its interior edge neighbours (diagonal ones if there are none)
  /// of the linear extrapolation through the zero on the boundary crossing.
  /// Empty for interior nodes and for masked nodes away from the domain.
  std::span<const GhostTerm> ghost_terms(std::size_t n) const {
    return {ghost_terms_.data() + ghost_offset_[n], ghost_terms_.data() + ghost_offset_[n + 1]};
  }
  /// Fraction of the segment from interior node `from` to masked node `to`
  /// that lies inside the domain, clamped below at min_boundary_fraction.
  double boundary_fraction(std::size_t from, std::size_t to) const;
  static constexpr double min_boundary_fraction = 1e-2;

 private:
  DomainSpec domain_;
  double h_;
  long i0_ = 0;
  long j0_ = 0;
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<long> dof_;
  std::vector<std::size_t> interior_nodes_;
  std::vector<unsigned char> cell_active_;
  std::vector<std::size_t> active_cells_;
  std::vector<std::size_t> ghost_offset_;
  std::vector<GhostTerm> ghost_terms_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Throws EmptyGridError if no node falls strictly inside the domain.
GridPtr build_grid(const DomainSpec& domain, double h);

// --- Fields ---------------------------------------------------------------

/// Nodal values; always zero on non-interior nodes.
class ScalarField {
 public:
  explicit ScalarField(GridPtr grid);
  ScalarField(GridPtr grid, std::vector<double> values);

  static ScalarField constant(GridPtr grid, double c);
  static ScalarField from_function(GridPtr grid, const std::function<double(Point2)>& fn);
  /// Values ordered like Grid::interior_nodes().
  static ScalarField from_dofs(GridPtr grid, std::span<const double> dofs);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t n) const { return values_[n]; }
  /// Writes to a masked node are ignored.
  void set(std::size_t n, double v);
  std::vector<double> dofs() const;

  double max_abs() const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// One value per lattice cell; only active cells are meaningful.
class CellField {
 public:
  explicit CellField(GridPtr grid, double fill = 0.0);
  CellField(GridPtr grid, std::vector<double> values);

  static CellField from_function(GridPtr grid, const std::function<double(Point2)>& fn);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t c) const { return values_[c]; }
  double& operator[](std::size_t c) { return values_[c]; }

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// One 2-vector per cell; entries of inactive cells are zero.
class VectorField {
 public:
  explicit VectorField(GridPtr grid);

  const Grid& grid() const { return *grid_; }
  std::array<double, 2> operator[](std::size_t c) const { return {gx_[c], gy_[c]}; }
  void set(std::size_t c, double gx, double gy) {
    gx_[c] = gx;
    gy_[c] = gy;
  }

 private:
  GridPtr grid_;
  std::vector<double> gx_;
  std::vector<double> gy_;
};

/// Bilinear-element gradient evaluated at the cell center.
VectorField gradient(const ScalarField& u);

/// One-sided gradients at the four corners of a cell, corner order as in
/// Grid::cell_nodes. Used by all discrete energies: averaging a function of
/// these four gradients has no hourglass modes, and the average of |g|^2
/// reproduces the 5-point Laplacian energy.
std::array<std::array<double, 2>, 4> corner_gradients(const ScalarField& u, std::size_t c);

/// Mean over the four corners of |g|^2 for every cell.
CellField cell_gradient_sq(const ScalarField& u);

/// Per-cell average of the corner values times h^2, summed over active cells.
/// Because masked nodes hold zero this equals h^2 times the nodal sum.
double integrate(const ScalarField& u);

/// h^2 times the sum over active cells.
double integrate_cells(const CellField& g);

/// Discrete L2 inner product, consistent with integrate().
double inner(const ScalarField& a, const ScalarField& b);

}  // namespace ellopt
