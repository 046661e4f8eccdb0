#include <doctest.h>

#include <cmath>
#include <map>

#include "solistab/construction.hpp"
#include "solistab/errors.hpp"
#include "solistab/special_functions.hpp"

using namespace solistab;

namespace {

const GroundState& state(int d, double p) {
  static std::map<std::pair<int, double>, GroundState> cache;
  auto key = std::make_pair(d, p);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, solve_ground_state({d, p}, 1e-10)).first;
  return it->second;
}

TorusField bump(const TorusGrid& g, double x0, double width) {
  return sample_function(g, ScalarKind::Real, [&](const double* x) {
    double r2 = (x[0] - x0) * (x[0] - x0);
    for (int a = 1; a < g.d; ++a) r2 += x[a] * x[a];
    return cplx(std::exp(-r2 / (width * width)));
  });
}

TorusGrid pair_grid(double R, int n = 2048) {
  return {1, recommended_side(pair_config({1, 3.0}, R)), n};
}

}  // namespace

TEST_CASE("the linearized operator maps F perp into F perp") {
  const auto& gs = state(1, 3.0);
  auto cfg = pair_config({1, 3.0}, 12.0);
  const auto g = pair_grid(12.0);
  LinearizedOperator op(gs, cfg, g);
  auto v = op.basis().project_F_perp(bump(g, 5.0, 1.0));
  auto Av = op.apply(v);
  CHECK(norm(op.basis().project_F(Av), Norm::H1) < 1e-10 * norm(v, Norm::H1));
  // K is self-adjoint in H^1.
  auto w = op.basis().project_F_perp(bump(g, -4.0, 2.0));
  CHECK(inner_h1(op.K(v), w) == doctest::Approx(inner_h1(v, op.K(w))).epsilon(1e-10));
}

TEST_CASE("linearized solves") {
  const auto& gs = state(1, 3.0);
  auto cfg = pair_config({1, 3.0}, 12.0);
  const auto g = pair_grid(12.0);
  LinearizedOperator op(gs, cfg, g);

  LinearSolveReport rep;
  auto zero = solve_linearized(op, TorusField(g, ScalarKind::Real), {}, &rep);
  CHECK(zero.max_abs() == 0.0);
  CHECK(rep.method == "zero");

  auto phi1 = op.basis().project_F_perp(bump(g, 6.5, 1.0));
  auto phi2 = op.basis().project_F_perp(bump(g, -3.0, 0.7));
  auto v1 = solve_linearized(op, phi1, {}, &rep);
  CHECK(rep.relative_residual <= 1e-12);
  CHECK(rep.norm_ratio > 0.0);
  auto v2 = solve_linearized(op, phi2);
  auto combo = phi1;
  combo *= 2.0;
  combo.axpy(-0.5, phi2);
  auto v12 = solve_linearized(op, combo);
  auto expect = v1;
  expect *= 2.0;
  expect.axpy(-0.5, v2);
  expect -= v12;
  CHECK(norm(expect, Norm::H1) < 1e-10 * norm(v12, Norm::H1));

  // A right-hand side with an F component is rejected.
  CHECK_THROWS_AS(solve_linearized(op, bump(g, 7.0, 1.0)), std::invalid_argument);

  // Starving the Krylov solver reports a stall.
  LinearSolveOptions starved;
  starved.max_iterations = 1;
  starved.fixed_point_iterations = 0;
  try {
    solve_linearized(op, phi1, starved);
    FAIL("expected SolverStalled");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == ErrorKind::SolverStalled);
  }
}

TEST_CASE("the single-soliton solve ratio is stable under refinement") {
  const auto& gs = state(1, 3.0);
  SolitonConfig cfg{{1, 3.0}, {{0.0}}, {1.0}};
  double ratios[2];
  int k = 0;
  for (int n : {1024, 2048}) {
    TorusGrid g{1, 80.0, n};
    LinearizedOperator op(gs, cfg, g);
    LinearSolveReport rep;
    solve_linearized(op, op.basis().project_F_perp(bump(g, 0.5, 1.0)), {}, &rep);
    ratios[k++] = rep.norm_ratio;
  }
  CHECK(ratios[0] == doctest::Approx(ratios[1]).epsilon(1e-8));
  CHECK(std::isfinite(ratios[0]));
}

TEST_CASE("one soliton needs no correction") {
  const auto& gs = state(1, 3.0);
  SolitonConfig cfg{{1, 3.0}, {{0.0}}, {1.0}};
  TorusGrid g{1, 80.0, 1024};
  auto ex = build_sharp_example(gs, cfg, g);
  CHECK(ex.rho.max_abs() == 0.0);
  auto diff = ex.u;
  diff -= sample_profile(gs, {0.0}, g);
  CHECK(diff.max_abs() == 0.0);
}

TEST_CASE("two-soliton sharp example for the cubic case") {
  const auto& gs = state(1, 3.0);
  const double R = 12.0;
  auto cfg = pair_config({1, 3.0}, R);
  const auto g = pair_grid(R);
  auto ex = build_sharp_example(gs, cfg, g);
  const auto& r = ex.report;
  CHECK(r.ratio >= 0.5);
  CHECK(r.ratio <= 2.0);
  CHECK(r.rho_H1 <= 1.0 / R);
  CHECK(r.perp_residual < 1e-9);
  CHECK(r.fixed_point_defect < 1e-10 * r.f_Hm1);
  for (double c : r.contraction_ratios) CHECK(c < 0.95);
  // The residual lives in F: (-Delta + 1)^{-1} h is a combination of the translation modes.
  auto hh = helmholtz_inverse(residual_h(ex.u, 3.0));
  const double h_norm = norm(hh, Norm::H1);
  CHECK(h_norm == doctest::Approx(r.Gamma_u).epsilon(1e-10));
  LinearizedOperator op(gs, cfg, g);
  CHECK(norm(op.basis().project_F_perp(hh), Norm::H1) < 1e-6 * h_norm);
  CHECK(r.to_json()["picard_iterations"] == r.picard_iterations);
}

TEST_CASE("residual scale is stable across separations") {
  for (double p : {2.0, 3.0}) {
    const auto& gs = state(1, p);
    double lo = 1e300, hi = 0;
    for (double R : {10.0, 12.0, 14.0}) {
      auto cfg = pair_config({1, p}, R);
      auto ex = build_sharp_example(gs, cfg, pair_grid(R));
      const double c = ex.report.Gamma_u / ex.report.interaction_scale;
      lo = std::min(lo, c);
      hi = std::max(hi, c);
      CHECK(ex.report.negative_part_H1 <= ex.report.interaction_scale);
    }
    CAPTURE(p);
    CHECK(hi / lo < 3.0);
  }
}

TEST_CASE("subquadratic remainder follows the stability modulus scale") {
  const auto& gs = state(1, 1.5);
  StabilityModulus F({1, 1.5});
  double lo = 1e300, hi = 0;
  for (double R : {10.0, 12.0, 14.0}) {
    auto cfg = pair_config({1, 1.5}, R);
    auto ex = build_sharp_example(gs, cfg, pair_grid(R));
    const double c = ex.report.rho_H1 / F(std::exp(-R));
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  CHECK(hi / lo < 5.0);
}

TEST_CASE("contraction monitor") {
  const auto& gs = state(1, 3.0);
  auto cfg = pair_config({1, 3.0}, 10.0);
  SharpOptions strict;
  strict.contraction_limit = 1e-300;
  strict.contraction_window = 1;
  strict.tol = 1e-300;
  try {
    build_sharp_example(gs, cfg, pair_grid(10.0), strict);
    FAIL("expected NotContracting");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == ErrorKind::NotContracting);
  }
  auto complex_cfg = pair_config({1, 3.0}, 12.0, 1.0, cplx(0.0, 1.0));
  CHECK_THROWS_AS(LinearizedOperator(gs, complex_cfg, pair_grid(12.0)), std::invalid_argument);
}

TEST_CASE("positivize") {
  const auto& gs = state(1, 3.0);
  TorusGrid g{1, 80.0, 1024};
  auto q = sample_profile(gs, {0.0}, g);
  auto same = positivize(q, 3.0);
  CHECK(same.negative_part_H1 == 0.0);
  CHECK(same.Gamma_after == same.Gamma_before);
  // u = Q - 2 Q(. + 12 e_1): the negative part sits around x = -12.
  auto u = q;
  u.axpy(-2.0, sample_profile(gs, {12.0}, g));
  auto pos = positivize(u, 3.0);
  CHECK(pos.negative_part_H1 > 1.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    CHECK(pos.u_plus[i].real() >= 0.0);
    if (u[i].real() < -1e-8) CHECK(g.coord(static_cast<int>(i)) < -5.0);
  }
  CHECK_THROWS_AS(positivize(q.as_complex(), 3.0), std::invalid_argument);
}
