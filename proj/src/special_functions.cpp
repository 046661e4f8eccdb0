#include "solistab/special_functions.hpp"

#include <cmath>
#include <stdexcept>

#include "solistab/errors.hpp"

namespace solistab {

namespace {

double half_dm1(int d) { return 0.5 * (d - 1); }

void check_dimension(int d) {
  if (d < 1) throw std::invalid_argument("dimension must be at least 1");
}

}  // namespace

double log_phi(int d, double t) {
  check_dimension(d);
  if (!(t > 0.0)) throw std::invalid_argument("phi requires t > 0");
  return -half_dm1(d) * std::log(t) - t;
}

double phi(int d, double t) { return std::exp(log_phi(d, t)); }

double psi_log(int d, double log_s, double domain_floor) {
  check_dimension(d);
  if (!(domain_floor > 0.0)) throw std::invalid_argument("domain floor must be positive");
  if (std::isnan(log_s)) throw std::invalid_argument("psi requires s > 0");
  if (log_s > log_phi(d, domain_floor))
    throw NumericalError(ErrorKind::OutOfRange, "s exceeds phi(domain_floor)");
  const double k = half_dm1(d);
  if (k == 0.0) return -log_s;

  // Root of g(t) = t + k ln t + ln s, increasing in t.
  auto g = [&](double t) { return t + k * std::log(t) + log_s; };
  double lo = domain_floor;
  double hi = std::max(2.0 * domain_floor, -log_s + 1.0);
  while (g(hi) < 0.0) hi *= 2.0;
  if (g(lo) >= 0.0) return lo;
  double t = -log_s + k * std::log(std::max(-log_s, 1.0));
  if (!(t > lo && t < hi)) t = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double gt = g(t);
    if (gt == 0.0) return t;
    (gt > 0.0 ? hi : lo) = t;
    double next = t - gt / (1.0 + k / t);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-16 * std::abs(t) || hi - lo <= 1e-16 * hi) return next;
    t = next;
  }
  throw NumericalError(ErrorKind::NonConvergence, "psi inversion did not converge");
}

double psi(int d, double s, double domain_floor) {
  if (!(s > 0.0)) throw std::invalid_argument("psi requires s > 0");
  return psi_log(d, std::log(s), domain_floor);
}

std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::Linear: return "linear";
    case Branch::LogD1: return "log_d1";
    case Branch::PsiD2: return "psi_d2";
    case Branch::PsiD3: return "psi_d3";
    case Branch::Subquadratic: return "subquadratic";
  }
  return "unknown";
}

Branch select_branch(const ProblemParams& params) {
  if (params.p == 2.0 && params.d >= 6)
    throw NumericalError(ErrorKind::OutOfRange, "p = 2 is not subcritical for d >= 6");
  params.validate();
  const double p = params.p;
  const int d = params.d;
  if (p > 2.0) return Branch::Linear;
  if (p < 2.0) return Branch::Subquadratic;
  switch (d) {
    case 1: return Branch::LogD1;
    case 2: return Branch::PsiD2;
    case 3: return Branch::PsiD3;
    default: return Branch::Linear;
  }
}

StabilityModulus::StabilityModulus(const ProblemParams& params, double domain_floor)
    : params_(params), branch_(select_branch(params)), floor_(domain_floor) {
  if (!(domain_floor > 0.0)) throw std::invalid_argument("domain floor must be positive");
}

double StabilityModulus::log_value(double log_s) const {
  const int d = params_.d;
  const double p = params_.p;
  switch (branch_) {
    case Branch::Linear:
      return log_s;
    case Branch::LogD1:
      return 0.5 * std::log(std::abs(log_s) + 1.0) + log_s;
    case Branch::PsiD2: {
      const double t = psi_log(d, log_s, floor_);
      return -0.25 * std::log(t) - t;
    }
    case Branch::PsiD3: {
      const double t = psi_log(d, log_s, floor_);
      return -std::log(t) - t + 0.5 * std::log(std::log(t + 2.0));
    }
    case Branch::Subquadratic: {
      const double t = psi_log(d, log_s, floor_);
      return (0.25 - 0.5 * p) * (d - 1) * std::log(t) - 0.5 * p * t;
    }
  }
  return log_s;
}

double StabilityModulus::operator()(double s) const {
  if (s < 0.0 || std::isnan(s)) throw std::invalid_argument("F requires s >= 0");
  if (s == 0.0) return 0.0;
  if (branch_ == Branch::Linear) return s;
  return std::exp(log_value(std::log(s)));
}

double StabilityModulus::monotone_limit() const {
  switch (branch_) {
    case Branch::Linear:
    case Branch::LogD1:
      return std::numeric_limits<double>::infinity();
    default:
      return phi(params_.d, floor_);
  }
}

}  // namespace solistab
