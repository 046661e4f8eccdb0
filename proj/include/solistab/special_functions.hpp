#pragma once

#include <limits>
#include <string_view>

#include "solistab/groundstate.hpp"

namespace solistab {

inline constexpr double kDefaultDomainFloor = 1e-3;

/// phi(t) = t^{-(d-1)/2} e^{-t}.
double phi(int d, double t);
double log_phi(int d, double t);

/// Inverse of phi on [domain_floor, inf). Throws OutOfRange above phi(domain_floor).
double psi(int d, double s, double domain_floor = kDefaultDomainFloor);
/// Same inverse, taking ln s so that s may lie far below the double range.
double psi_log(int d, double log_s, double domain_floor = kDefaultDomainFloor);

enum class Branch { Linear, LogD1, PsiD2, PsiD3, Subquadratic };

std::string_view to_string(Branch b);

/// Branch of the stability modulus for (d, p). Throws OutOfRange for p = 2, d >= 6.
Branch select_branch(const ProblemParams& params);

class StabilityModulus {
 public:
  explicit StabilityModulus(const ProblemParams& params, double domain_floor = kDefaultDomainFloor);

  Branch branch() const { return branch_; }
  const ProblemParams& params() const { return params_; }
  double domain_floor() const { return floor_; }

  double operator()(double s) const;
  /// ln F(s) given ln s.
  double log_value(double log_s) const;
  /// F is increasing on (0, s0); infinite when the branch has no restriction.
  double monotone_limit() const;

 private:
  ProblemParams params_;
  Branch branch_;
  double floor_;
};

}  // namespace solistab
