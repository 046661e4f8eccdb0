#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>

#include "solistab/errors.hpp"
#include "solistab/verifier.hpp"

using namespace solistab;

namespace {

const GroundState& state(int d, double p) {
  static std::map<std::pair<int, double>, GroundState> cache;
  auto key = std::make_pair(d, p);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, solve_ground_state({d, p}, 1e-10)).first;
  return it->second;
}

const std::vector<SweepRecord>& sharp_records(double p) {
  static std::map<double, std::vector<SweepRecord>> cache;
  auto it = cache.find(p);
  if (it == cache.end()) it = cache.emplace(p, sharp_sweep(state(1, p), 2, {10.0, 12.0, 14.0})).first;
  return it->second;
}

}  // namespace

TEST_CASE("chain configurations and sweep grids") {
  const auto cfg = chain_config({1, 3.0}, 3, 12.0);
  REQUIRE(cfg.m() == 3);
  CHECK(cfg.centers[0][0] == -12.0);
  CHECK(cfg.centers[2][0] == 12.0);
  CHECK_THROWS_AS(chain_config({1, 3.0}, 0, 12.0), std::invalid_argument);
  CHECK_THROWS_AS(chain_config({1, 3.0}, 2, 12.0, {1.0}), std::invalid_argument);

  const auto& gs = state(1, 3.0);
  const auto g = sweep_grid(gs, cfg);
  CHECK(g.L / g.n <= 0.025);
  // The box holds every tail above the threshold.
  CHECK(gs.Q(0.5 * g.L - 12.0) <= 1e-10 * 1.0001);
  SweepOptions tiny;
  tiny.max_points = 1000;
  try {
    sweep_grid(gs, cfg, tiny);
    FAIL("expected SweepInfeasible");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == ErrorKind::SweepInfeasible);
  }
}

TEST_CASE("single soliton scaled by 1 + eps") {
  const auto& gs = state(1, 3.0);
  const auto cfg = chain_config({1, 3.0}, 1, 0.0);
  const auto g = sweep_grid(gs, cfg);
  const auto q = sample_soliton_sum(gs, cfg, g);
  auto recs = perturbed_sweep(gs, cfg, q, {1e-3, 3e-3, 1e-2});
  const double qn = norm(q, Norm::H1);
  for (const auto& r : recs) {
    // u = (1 + a) Q with a = eps / ||Q||: rho = a Q and Gamma = ((1 + a)^3 - (1 + a)) ||Q||.
    const double a = r.eps / qn;
    CHECK(r.dist == doctest::Approx(r.eps).epsilon(1e-8));
    CHECK(r.Gamma_u == doctest::Approx((std::pow(1 + a, 3) - (1 + a)) * qn).epsilon(1e-8));
  }
  CHECK(verify_upper_bound(recs, 1.05).pass);
  auto lower = verify_lower_bounds(recs);
  CHECK(lower.checks[0].skipped);
  CHECK(lower.notes.size() == 1);
  CHECK(lower.pass);
}

TEST_CASE("an exact sum passes the intermediate checks trivially") {
  const auto& gs = state(1, 3.0);
  const auto cfg = chain_config({1, 3.0}, 2, 12.0);
  const auto g = sweep_grid(gs, cfg);
  auto recs = perturbed_sweep(gs, cfg, sample_soliton_sum(gs, cfg, g), {0.0});
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].dist == 0.0);
  CHECK(recs[0].identity_residual < 1e-10);
  auto rep = verify_intermediate_inequalities(recs);
  CHECK(rep.pass);
  CHECK(rep.checks[0].rule.find("trivially") != std::string::npos);
}

TEST_CASE("cubic sharp sweep") {
  const auto& recs = sharp_records(3.0);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].R == doctest::Approx(10.0).epsilon(1e-6));
  CHECK(verify_upper_bound(recs).pass);
  CHECK(verify_projection_ratio(recs).pass);
  CHECK(verify_intermediate_inequalities(recs).pass);
  for (const auto& r : recs) {
    CHECK(r.flags.empty());
    CHECK(r.max_orthogonality_residual < 1e-9);
  }
}

TEST_CASE("quadratic sharp sweep meets the lower bounds") {
  const auto& recs = sharp_records(2.0);
  CHECK(verify_lower_bounds(recs).pass);
  CHECK(verify_upper_bound(recs).pass);
  CHECK(verify_intermediate_inequalities(recs).pass);
  CHECK(verify_sharpness_growth(recs).pass);
}

TEST_CASE("subquadratic sharp sweep grows against Gamma") {
  const auto& recs = sharp_records(1.5);
  auto rep = verify_sharpness_growth(recs);
  CHECK(rep.pass);
  CHECK(rep.checks[0].values.size() == 3);
  CHECK(verify_lower_bounds(recs).pass);
  // One point cannot show growth.
  CHECK_FALSE(verify_sharpness_growth({recs[0]}).pass);
}

TEST_CASE("bracket checks fail on spread or non-positive values") {
  SweepRecord a, b;
  a.m = b.m = 1;
  a.dist = 1.0;
  a.F_of_Gamma = 1.0;
  b.dist = 10.0;
  b.F_of_Gamma = 1.0;
  CHECK_FALSE(verify_upper_bound({a, b}, 5.0).pass);
  CHECK(verify_upper_bound({a, b}, 11.0).pass);
  b.dist = 0.0;
  CHECK_FALSE(verify_upper_bound({a, b}, 11.0).pass);
  CHECK_FALSE(verify_upper_bound({}).pass);
  CHECK(verify_upper_bound({a}).to_json()["status"] == "PASS");
}

TEST_CASE("complex single soliton") {
  const auto& gs = state(1, 3.0);
  auto rep = verify_complex_single(gs, 0.7, {1e-3, 3e-3, 1e-2});
  CHECK(rep.pass);
  REQUIRE(rep.checks.size() == 2);
  CHECK(rep.checks[1].hi < 1e-10);
}

TEST_CASE("complex multi-soliton sums") {
  const auto& gs = state(1, 3.0);
  const std::vector<double> eps{1e-3, 3e-3, 1e-2};
  auto aligned = chain_config({1, 3.0}, 2, 12.0, {std::polar(1.0, 0.3), std::polar(1.0, 0.3)});
  std::vector<SweepRecord> recs;
  auto rep = verify_complex_multi(gs, aligned, eps, {}, &recs);
  CHECK(rep.pass);
  CHECK_FALSE(rep.checks[0].skipped);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].flags.empty());

  auto crossed = chain_config({1, 3.0}, 2, 12.0, {1.0, cplx(0.0, 1.0)});
  auto flagged = verify_complex_multi(gs, crossed, eps, {}, &recs);
  CHECK(flagged.pass);
  CHECK(flagged.checks[0].skipped);
  CHECK(recs[0].flags == std::vector<std::string>{"out-of-theorem"});
  ComplexOptions strict;
  strict.strict = true;
  try {
    verify_complex_multi(gs, crossed, eps, strict);
    FAIL("expected PhaseRestrictionViolated");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == ErrorKind::PhaseRestrictionViolated);
  }
  CHECK_THROWS_AS(verify_complex_multi(state(1, 2.0), chain_config({1, 2.0}, 2, 12.0), eps), std::invalid_argument);
  CHECK_THROWS_AS(verify_complex_multi(gs, chain_config({1, 3.0}, 1, 0.0), eps), std::invalid_argument);
}

TEST_CASE("sweep CSV layout") {
  const auto& recs = sharp_records(3.0);
  const auto path = std::filesystem::temp_directory_path() / "solistab_sweep_test.csv";
  write_sweep_csv(path.string(), recs);
  std::ifstream in(path);
  std::string line;
  int rows = 0;
  std::getline(in, line);
  CHECK(line.rfind("d,p,m,R,eps,Gamma_u,dist", 0) == 0);
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);
  std::filesystem::remove(path);
  CHECK(recs[0].to_json()["n"] == recs[0].n);
}
