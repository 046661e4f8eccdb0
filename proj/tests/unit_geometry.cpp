#include <doctest.h>

#include <cmath>
#include <random>

#include "solistab/errors.hpp"
#include "solistab/geometry.hpp"

using namespace solistab;

namespace {

double norm(const Point& x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

// Exhaustive post-transform check of the projection property.
void check_transform(const std::vector<Point>& pts, const ProjectionResult& res) {
  const std::size_t d = pts[0].size();
  REQUIRE(res.transformed.size() == pts.size());
  CHECK(res.order[0] == res.base_index);
  CHECK(norm(res.transformed[0]) == 0.0);
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const auto& y = res.transformed[k];
    CHECK(y[0] > 0.0);
    CHECK(y[0] / norm(y) >= res.c_achieved - 1e-15);
    CHECK(res.transformed[k][0] >= res.transformed[k - 1][0]);
    // The transform is a rigid motion: lengths of differences are preserved.
    Point dx(d);
    for (std::size_t a = 0; a < d; ++a) dx[a] = pts[res.order[k]][a] - pts[res.base_index][a];
    CHECK(norm(y) == doctest::Approx(norm(dx)).epsilon(1e-12));
  }
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      Point u(d);
      for (std::size_t a = 0; a < d; ++a) u[a] = pts[j][a] - pts[i][a];
      double t = 0;
      for (std::size_t a = 0; a < d; ++a) t += u[a] * res.direction[a];
      CHECK(std::abs(t) / norm(u) >= res.delta - 1e-15);
    }
  CHECK(res.c_achieved >= res.delta - 1e-12);
  CHECK(norm(res.apply(res.direction)) == doctest::Approx(1.0));
  CHECK(res.apply(res.direction)[0] == doctest::Approx(1.0).epsilon(1e-12));
}

}  // namespace

TEST_CASE("two points use their own direction") {
  std::vector<Point> pts{{1.0, 2.0, 0.5}, {4.0, -2.0, 0.5}};
  auto res = project_points(pts, 0.5);
  CHECK(res.delta == doctest::Approx(1.0));
  CHECK(res.c_achieved == doctest::Approx(1.0));
  CHECK(std::abs(res.direction[0]) == doctest::Approx(0.6));
  CHECK(std::abs(res.direction[1]) == doctest::Approx(0.8));
  check_transform(pts, res);
}

TEST_CASE("collinear points project along the line") {
  std::vector<Point> pts{{0, 0}, {1, 1}, {-2, -2}, {5, 5}};
  auto res = project_points(pts, 0.9);
  CHECK(res.c_achieved == doctest::Approx(1.0));
  CHECK(res.meets_target);
  check_transform(pts, res);
}

TEST_CASE("random points in R^3") {
  std::mt19937 rng(12345);
  std::normal_distribution<double> nd;
  std::vector<Point> pts(6, Point(3));
  for (auto& x : pts)
    for (auto& v : x) v = 10 * nd(rng);
  auto res = project_points(pts, 0.05);
  CHECK(res.meets_target);
  CHECK(res.candidates == 4 * 25 * 100 + 15);
  check_transform(pts, res);
  // Determinism.
  auto again = project_points(pts, 0.05);
  CHECK(again.direction == res.direction);
  CHECK(again.order == res.order);
}

TEST_CASE("planar and one-dimensional inputs") {
  std::vector<Point> plane{{0, 0}, {10, 0}, {0, 10}, {10, 10}, {5, 3}};
  auto res = project_points(plane, 0.01);
  check_transform(plane, res);
  std::vector<Point> line{{3.0}, {-1.0}, {7.5}};
  auto r1 = project_points(line, 0.5);
  CHECK(r1.base_index == 1);
  CHECK(r1.c_achieved == 1.0);
  check_transform(line, r1);
}

TEST_CASE("higher dimensions use the R_d lattice") {
  auto dirs = sphere_directions(5, 200);
  CHECK(dirs.size() == 200);
  for (const auto& v : dirs) CHECK(norm(v) == doctest::Approx(1.0));
  std::mt19937 rng(1);
  std::normal_distribution<double> nd;
  std::vector<Point> pts(4, Point(5));
  for (auto& x : pts)
    for (auto& v : x) v = nd(rng);
  check_transform(pts, project_points(pts, 0.01));
}

TEST_CASE("degenerate and invalid input") {
  std::vector<Point> dup{{1, 2}, {3, 4}, {1, 2}};
  CHECK_THROWS_AS(project_points(dup, 0.1), NumericalError);
  CHECK_THROWS_AS(project_points({{1, 2}}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(project_points({{1, 2}, {1, 2, 3}}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(project_points({{1, 2}, {3, 4}}, 1.5), std::invalid_argument);
  std::vector<Point> many(65, Point{0.0});
  for (std::size_t i = 0; i < many.size(); ++i) many[i][0] = static_cast<double>(i);
  CHECK_THROWS_AS(project_points(many, 0.1), std::invalid_argument);
}
