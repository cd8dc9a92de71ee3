#include "ellopt/field_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace ellopt {

namespace {

// %.17g keeps the output bit-exact across runs and round-trips doubles.
std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

void check_written(std::ostream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw IoError("write failed: " + path.string());
}

void vtk_header(std::ostream& os, const Grid& g, std::size_t nx, std::size_t ny, Point2 origin) {
  os << "# vtk DataFile Version 3.0\n"
     << "ellopt " << describe(g.domain()) << "\n"
     << "ASCII\n"
     << "DATASET STRUCTURED_POINTS\n"
     << "DIMENSIONS " << nx << " " << ny << " 1\n"
     << "ORIGIN " << fmt(origin.x) << " " << fmt(origin.y) << " 0\n"
     << "SPACING " << fmt(g.h()) << " " << fmt(g.h()) << " 1\n";
}

}  // namespace

void write_csv(std::ostream& os, const ScalarField& u) {
  const Grid& g = u.grid();
  os << "x,y,value\n";
  for (std::size_t n = 0; n < g.num_nodes(); ++n) {
    const Point2 p = g.position(n);
    os << fmt(p.x) << ',' << fmt(p.y) << ',' << fmt(u[n]) << '\n';
  }
}

void write_csv(std::ostream& os, const CellField& v) {
  const Grid& g = v.grid();
  os << "x,y,value\n";
  for (std::size_t c : g.active_cells()) {
    const Point2 p = g.cell_center(c);
    os << fmt(p.x) << ',' << fmt(p.y) << ',' << fmt(v[c]) << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const ScalarField& u) {
  auto os = open_out(path);
  write_csv(os, u);
  check_written(os, path);
}

void write_csv(const std::filesystem::path& path, const CellField& v) {
  auto os = open_out(path);
  write_csv(os, v);
  check_written(os, path);
}

ScalarField read_csv(std::istream& is, GridPtr grid) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("csv: missing header");
  if (line.rfind("x,y,value", 0) != 0) throw IoError("csv: unexpected header '" + line + "'");
  std::vector<double> values(grid->num_nodes(), 0.0);
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string sx, sy, sv;
    if (!std::getline(ls, sx, ',') || !std::getline(ls, sy, ',') || !std::getline(ls, sv)) {
      throw IoError("csv: malformed row " + std::to_string(row));
    }
    double x = 0, y = 0, v = 0;
    try {
      x = std::stod(sx);
      y = std::stod(sy);
      v = std::stod(sv);
    } catch (const std::exception&) {
      throw IoError("csv: non-numeric entry in row " + std::to_string(row));
    }
    const std::size_t n = grid->nearest_node({x, y});
    const Point2 p = grid->position(n);
    if (std::abs(p.x - x) > 1e-6 * grid->h() || std::abs(p.y - y) > 1e-6 * grid->h()) {
      throw IoError("csv: row " + std::to_string(row) + " is not a lattice node");
    }
    values[n] = std::isfinite(v) ? v : 0.0;
  }
  return ScalarField(std::move(grid), std::move(values));
}

ScalarField read_csv(const std::filesystem::path& path, GridPtr grid) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  return read_csv(is, std::move(grid));
}

void write_vtk(std::ostream& os, const ScalarField& u, const std::string& name) {
  const Grid& g = u.grid();
  vtk_header(os, g, g.nx(), g.ny(), g.position(0));
  os << "POINT_DATA " << g.num_nodes() << "\n"
     << "SCALARS " << name << " double 1\n"
     << "LOOKUP_TABLE default\n";
  for (std::size_t n = 0; n < g.num_nodes(); ++n) {
    os << (g.is_interior(n) ? fmt(u[n]) : "nan") << '\n';
  }
}

void write_vtk(std::ostream& os, const CellField& v, const std::string& name) {
  const Grid& g = v.grid();
  vtk_header(os, g, g.nx(), g.ny(), g.position(0));
  os << "CELL_DATA " << g.num_cells() << "\n"
     << "SCALARS " << name << " double 1\n"
     << "LOOKUP_TABLE default\n";
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    os << (g.cell_is_active(c) ? fmt(v[c]) : "nan") << '\n';
  }
}

void write_vtk(const std::filesystem::path& path, const ScalarField& u, const std::string& name) {
  auto os = open_out(path);
  write_vtk(os, u, name);
  check_written(os, path);
}

void write_vtk(const std::filesystem::path& path, const CellField& v, const std::string& name) {
  auto os = open_out(path);
  write_vtk(os, v, name);
  check_written(os, path);
}

}  // namespace ellopt
