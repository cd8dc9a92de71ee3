#include "ellopt/set_metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace ellopt {

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew's monotone chain; returns the hull area.
double hull_area(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return 0.0;
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  double a = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point2& p = hull[i];
    const Point2& q = hull[(i + 1) % hull.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * std::abs(a);
}

}  // namespace

void require_binary(const ScalarField& indicator) {
  for (double v : indicator.values()) {
    if (v != 0.0 && v != 1.0) throw std::invalid_argument("indicator field must take only the values 0 and 1");
  }
}

double set_area(const ScalarField& indicator) {
  require_binary(indicator);
  return integrate(indicator);
}

double perimeter(const ScalarField& indicator) {
  require_binary(indicator);
  const Grid& g = indicator.grid();
  std::size_t edges = 0;
  for (std::size_t n : g.interior_nodes()) {
    const std::size_t i = g.node_i(n);
    const std::size_t j = g.node_j(n);
    for (std::size_t m : {g.node(i + 1, j), g.node(i, j + 1)}) {
      if (g.is_interior(m) && indicator[m] != indicator[n]) ++edges;
    }
  }
  return g.h() * static_cast<double>(edges);
}

double convexity_defect(const ScalarField& indicator) {
  require_binary(indicator);
  const Grid& g = indicator.grid();
  const double hh = 0.5 * g.h();
  std::vector<Point2> corners;
  std::size_t count = 0;
  for (std::size_t n : g.interior_nodes()) {
    if (indicator[n] != 1.0) continue;
    ++count;
    const Point2 p = g.position(n);
    for (double sx : {-hh, hh}) {
      for (double sy : {-hh, hh}) corners.push_back({p.x + sx, p.y + sy});
    }
  }
  if (count == 0) throw std::invalid_argument("convexity_defect: empty set");
  const double area = g.h() * g.h() * static_cast<double>(count);
  return (hull_area(std::move(corners)) - area) / area;
}

ScalarField complement(const ScalarField& indicator) {
  require_binary(indicator);
  const Grid& g = indicator.grid();
  ScalarField out(indicator.grid_ptr());
  for (std::size_t n : g.interior_nodes()) out.set(n, 1.0 - indicator[n]);
  return out;
}

}  // namespace ellopt
