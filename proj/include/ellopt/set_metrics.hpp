#pragma once

#include "ellopt/grid.hpp"

namespace ellopt {

// Nodal indicator sets. Node n stands for the h x h square centered at it, so
// the area of a set is h^2 times its node count (= integrate(indicator)).

/// Throws std::invalid_argument unless every value is exactly 0 or 1.
void require_binary(const ScalarField& indicator);

double set_area(const ScalarField& indicator);

/// h times the number of edges between two interior nodes whose indicator
/// values differ. This is the Manhattan (l1) length of the set boundary inside
/// the domain; for a disk of radius r it tends to 8r, not 2 pi r.
double perimeter(const ScalarField& indicator);

/// (area(convex hull of the node squares) - area) / area; zero for
/// lattice-convex sets. Throws std::invalid_argument on an empty set.
double convexity_defect(const ScalarField& indicator);

/// 1 - indicator on interior nodes.
ScalarField complement(const ScalarField& indicator);

}  // namespace ellopt
