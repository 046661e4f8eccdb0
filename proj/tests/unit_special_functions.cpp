#include <doctest.h>

#include <cmath>
#include <random>

#include "solistab/errors.hpp"
#include "solistab/special_functions.hpp"

using namespace solistab;

TEST_CASE("phi examples") {
  CHECK(phi(1, 5) == doctest::Approx(std::exp(-5.0)).epsilon(1e-14));
  CHECK(phi(3, 10) == doctest::Approx(std::exp(-10.0) / 10).epsilon(1e-14));
  CHECK(phi(2, 4) == doctest::Approx(std::exp(-4.0) / 2).epsilon(1e-14));
  CHECK(log_phi(3, 800) == doctest::Approx(-800 - std::log(800.0)).epsilon(1e-14));
}

TEST_CASE("psi inverts phi") {
  CHECK(psi(1, std::exp(-5.0)) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(psi(3, std::exp(-10.0) / 10) == doctest::Approx(10.0).epsilon(1e-13));
  for (int d = 1; d <= 5; ++d) {
    const double s_top = phi(d, 1.0);
    double prev = 0;
    for (int i = 0; i < 50; ++i) {
      const double s = s_top * std::pow(10.0, -10.0 * i / 49.0);
      const double t = psi(d, s);
      CHECK(std::abs(phi(d, t) - s) / s < 1e-12);
      CHECK(t > prev);
      prev = t;
    }
  }
  // deep underflow through the log interface
  CHECK(psi_log(3, log_phi(3, 900.0)) == doctest::Approx(900.0).epsilon(1e-14));
}

TEST_CASE("psi range") {
  CHECK_THROWS_AS(psi(2, phi(2, kDefaultDomainFloor) * 1.01), NumericalError);
  CHECK_THROWS_AS(psi(2, 0.0), std::invalid_argument);
}

TEST_CASE("branch table") {
  CHECK(select_branch({3, 3}) == Branch::Linear);
  CHECK(select_branch({4, 2}) == Branch::Linear);
  CHECK(select_branch({5, 2}) == Branch::Linear);
  CHECK(select_branch({1, 2}) == Branch::LogD1);
  CHECK(select_branch({2, 2}) == Branch::PsiD2);
  CHECK(select_branch({3, 2}) == Branch::PsiD3);
  CHECK(select_branch({1, 1.5}) == Branch::Subquadratic);
  CHECK(select_branch({5, 1.2}) == Branch::Subquadratic);
  CHECK_THROWS_AS(select_branch({6, 2}), NumericalError);
  CHECK_THROWS_AS(select_branch({1, 1.0}), std::invalid_argument);
}

TEST_CASE("F examples") {
  CHECK(StabilityModulus({3, 3})(0.01) == 0.01);
  CHECK(StabilityModulus({1, 2})(std::exp(-1.0)) == doctest::Approx(std::sqrt(2.0) * std::exp(-1.0)).epsilon(1e-14));
  CHECK(StabilityModulus({2, 2})(phi(2, 8)) == doctest::Approx(std::pow(8.0, -0.25) * std::exp(-8.0)).epsilon(1e-12));
  for (auto pr : {ProblemParams{1, 2}, {2, 2}, {3, 2}, {2, 1.5}, {3, 3}}) CHECK(StabilityModulus(pr)(0.0) == 0.0);
}

TEST_CASE("subquadratic composition identity") {
  for (int d = 1; d <= 3; ++d) {
    for (double p : {1.2, 1.5, 1.9}) {
      StabilityModulus F({d, p});
      for (double t : {0.5, 2.0, 8.0, 20.0, 40.0}) {
        const double direct = std::pow(t, (0.25 - p / 2) * (d - 1)) * std::exp(-p * t / 2);
        CHECK(F(phi(d, t)) == doctest::Approx(direct).epsilon(1e-11));
      }
    }
  }
}

TEST_CASE("F is monotone and continuous at zero") {
  for (auto pr : {ProblemParams{1, 2}, {2, 2}, {3, 2}, {1, 1.5}, {2, 1.5}, {3, 1.2}, {2, 3}}) {
    StabilityModulus F(pr);
    const double s0 = std::min(F.monotone_limit() * (1 - 1e-12), 10.0);
    double prev = 0;
    for (int i = 0; i <= 400; ++i) {
      const double s = s0 * std::pow(10.0, -12.0 * (400 - i) / 400.0);
      const double v = F(s);
      CHECK(v >= prev);
      prev = v;
    }
    CHECK(F(1e-300) < 1e-100);
  }
}

TEST_CASE("log evaluator survives underflow") {
  StabilityModulus F({3, 2});
  const double lv = F.log_value(-2000.0);
  CHECK(std::isfinite(lv));
  CHECK(lv > -2000.0);
  CHECK(lv < -1990.0);
}
