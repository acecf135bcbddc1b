#pragma once

#include "grushin/types.hpp"

#include <array>
#include <vector>

namespace grushin::detail {

/// Incremental Bowyer-Watson Delaunay triangulation of a point set.
/// Returns counter-clockwise triangles over the convex hull. Insertion order
/// is the input order, so spatially coherent input keeps point location cheap.
std::vector<std::array<int, 3>> delaunay(const std::vector<Vec2>& points);

} // namespace grushin::detail
