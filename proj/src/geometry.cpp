#include "solistab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "solistab/errors.hpp"

namespace solistab {

namespace {

double dot(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Point diff(const Point& a, const Point& b) {
  Point out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

double length(const Point& a) { return std::sqrt(dot(a, a)); }

// Root of x^{d+1} = x + 1, the generalized golden ratio behind the R_d sequence.
double harmonious(int d) {
  double x = 2.0;
  for (int i = 0; i < 60; ++i) x = std::pow(1.0 + x, 1.0 / (d + 1));
  return x;
}

double min_ratio(const std::vector<Point>& units, const Point& tau) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& u : units) best = std::min(best, std::abs(dot(u, tau)));
  return best;
}

}  // namespace

std::vector<Point> sphere_directions(int d, std::size_t count) {
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  std::vector<Point> out;
  if (d == 1) {
    out.push_back({1.0});
    return out;
  }
  out.reserve(count);
  if (d == 2) {
    for (std::size_t i = 0; i < count; ++i) {
      const double t = 2.0 * M_PI * (i + 0.5) / count;
      out.push_back({std::cos(t), std::sin(t)});
    }
    return out;
  }
  if (d == 3) {
    const double golden = 0.5 * (1.0 + std::sqrt(5.0));
    for (std::size_t i = 0; i < count; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / count;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = 2.0 * M_PI * std::fmod(i / golden, 1.0);
      out.push_back({rho * std::cos(phi), rho * std::sin(phi), z});
    }
    return out;
  }
  // R_d points in the unit cube pushed through the normal quantile, then normalized.
  const double g = harmonious(d);
  std::vector<double> alpha(d);
  for (int j = 0; j < d; ++j) alpha[j] = std::pow(1.0 / g, j + 1);
  boost::math::normal_distribution<double> normal;
  for (std::size_t i = 0; i < count; ++i) {
    Point v(d);
    for (int j = 0; j < d; ++j) v[j] = boost::math::quantile(normal, std::fmod(0.5 + (i + 1) * alpha[j], 1.0));
    const double n = length(v);
    for (auto& x : v) x /= n;
    out.push_back(std::move(v));
  }
  return out;
}

Point ProjectionResult::apply(const Point& x) const {
  const std::size_t d = direction.size();
  Point out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i] += rotation[i * d + j] * x[j];
  return out;
}

nlohmann::json ProjectionResult::to_json() const {
  return {{"direction", direction}, {"delta", delta},       {"base_index", base_index},
          {"order", order},         {"rotation", rotation}, {"transformed", transformed},
          {"c_achieved", c_achieved}, {"meets_target", meets_target}, {"candidates", candidates}};
}

ProjectionResult project_points(const std::vector<Point>& points, double delta_target) {
  if (points.size() < 2) throw std::invalid_argument("need at least two points");
  if (points.size() > 64) throw std::invalid_argument("at most 64 points are supported");
  if (!(delta_target > 0.0 && delta_target < 1.0)) throw std::invalid_argument("delta_target must lie in (0, 1)");
  const std::size_t d = points[0].size();
  if (d == 0) throw std::invalid_argument("points must have positive dimension");
  for (const auto& x : points)
    if (x.size() != d) throw std::invalid_argument("points have mixed dimensions");

  std::vector<Point> units;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      Point v = diff(points[j], points[i]);
      const double n = length(v);
      if (n == 0.0) throw NumericalError(ErrorKind::DegenerateInput, "duplicate points");
      for (auto& x : v) x /= n;
      units.push_back(std::move(v));
    }

  const std::size_t m = points.size() - 1;
  std::vector<Point> candidates = sphere_directions(static_cast<int>(d), 4 * m * m * 100);
  candidates.insert(candidates.end(), units.begin(), units.end());

  ProjectionResult res;
  res.candidates = candidates.size();
  res.delta = -1.0;
  for (const auto& tau : candidates) {
    const double s = min_ratio(units, tau);
    if (s > res.delta) {
      res.delta = s;
      res.direction = tau;
    }
  }
  if (!(res.delta > 0.0)) throw NumericalError(ErrorKind::DegenerateInput, "no separating direction found");
  res.meets_target = res.delta > delta_target;

  // Rotation: Householder reflection taking tau to e_1, with the last axis flipped to make it
  // proper when d >= 2.
  const auto D = static_cast<Eigen::Index>(d);
  Eigen::VectorXd tau = Eigen::Map<const Eigen::VectorXd>(res.direction.data(), D);
  Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(D, D);
  Eigen::VectorXd v = tau - Eigen::VectorXd::Unit(D, 0);
  if (v.norm() > 1e-14) {
    rot -= 2.0 * v * v.transpose() / v.squaredNorm();
    if (d >= 2) rot.row(D - 1) *= -1.0;
  }
  res.rotation.resize(d * d);
  for (Eigen::Index i = 0; i < D; ++i)
    for (Eigen::Index j = 0; j < D; ++j) res.rotation[i * d + j] = rot(i, j);

  std::vector<double> proj(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) proj[k] = dot(points[k], res.direction);
  res.base_index = static_cast<std::size_t>(std::min_element(proj.begin(), proj.end()) - proj.begin());
  res.order.resize(points.size());
  std::iota(res.order.begin(), res.order.end(), 0);
  std::stable_sort(res.order.begin(), res.order.end(), [&](std::size_t a, std::size_t b) { return proj[a] < proj[b]; });

  res.c_achieved = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < points.size(); ++k) {
    Point y = res.apply(diff(points[res.order[k]], points[res.base_index]));
    if (k == 0) std::fill(y.begin(), y.end(), 0.0);
    else res.c_achieved = std::min(res.c_achieved, y[0] / length(y));
    res.transformed.push_back(std::move(y));
  }
  return res;
}

}  // namespace solistab
