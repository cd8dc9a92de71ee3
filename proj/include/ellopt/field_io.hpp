#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "ellopt/grid.hpp"

namespace ellopt {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CSV: header "x,y,value", one row per lattice node, row-major (x fastest).
// Cell fields list active cells only, at cell centers.
void write_csv(std::ostream& os, const ScalarField& u);
void write_csv(std::ostream& os, const CellField& v);
void write_csv(const std::filesystem::path& path, const ScalarField& u);
void write_csv(const std::filesystem::path& path, const CellField& v);

/// Reads a CSV written by write_csv onto `grid`. Rows must hit lattice nodes;
/// values on non-interior nodes are dropped.
ScalarField read_csv(std::istream& is, GridPtr grid);
ScalarField read_csv(const std::filesystem::path& path, GridPtr grid);

// Legacy ASCII VTK STRUCTURED_POINTS; masked nodes / inactive cells are NaN.
void write_vtk(std::ostream& os, const ScalarField& u, const std::string& name);
void write_vtk(std::ostream& os, const CellField& v, const std::string& name);
void write_vtk(const std::filesystem::path& path, const ScalarField& u, const std::string& name);
void write_vtk(const std::filesystem::path& path, const CellField& v, const std::string& name);

}  // namespace ellopt
