#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

namespace solistab {

using Point = std::vector<double>;

/// A rigid motion taking a point set to a position where every point but the base one has a
/// positive first coordinate bounded below against its norm.
struct ProjectionResult {
  /// Unit vector tau mapped to e_1.
  Point direction;
  /// Min over pairs of |<(x_i - x_j) / |x_i - x_j|, tau>|.
  double delta = 0.0;
  std::size_t base_index = 0;
  /// order[k] is the input index of the k-th transformed point.
  std::vector<std::size_t> order;
  /// Orthogonal matrix, row-major, with rotation * tau = e_1 (proper for d >= 2).
  std::vector<double> rotation;
  /// rotation * (x_order[k] - x_base), so transformed[0] = 0.
  std::vector<Point> transformed;
  /// Min over k >= 1 of transformed[k][0] / |transformed[k]|.
  double c_achieved = 0.0;
  bool meets_target = false;
  std::size_t candidates = 0;

  Point apply(const Point& x) const;
  nlohmann::json to_json() const;
};

/// Deterministic quasi-uniform directions on the unit sphere of R^d.
std::vector<Point> sphere_directions(int d, std::size_t count);

/// Direction search over 4 m^2 * 100 lattice directions plus every pairwise difference
/// direction. Throws DegenerateInput for duplicate points.
ProjectionResult project_points(const std::vector<Point>& points, double delta_target);

}  // namespace solistab
