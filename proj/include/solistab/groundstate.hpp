#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace solistab {

/// Largest exponent accepted when d <= 2, where no critical exponent applies.
inline constexpr double kMaxExponent = 20.0;

struct ProblemParams {
  int d = 1;
  double p = 3.0;

  /// Throws std::invalid_argument unless d >= 1 and 1 < p < critical exponent.
  void validate() const;
};

struct GroundStateOptions {
  /// Truncation radius. Zero selects max(40, 25 + 5 ln(1/tol)).
  double r_max = 0.0;
  /// Uniform output spacing beyond r = 1.
  double output_h = 0.005;
  /// Starting radius of the outward integration for d >= 2.
  double eps = 1e-6;
};

double default_r_max(double tol);

class GroundState {
 public:
  GroundState() = default;

  const ProblemParams& params() const { return params_; }
  int d() const { return params_.d; }
  double p() const { return params_.p; }
  double tol() const { return tol_; }
  double r_max() const { return r_max_; }
  double c_Q() const { return c_Q_; }
  double q0() const { return q_.front(); }

  const std::vector<double>& r() const { return r_; }
  const std::vector<double>& q() const { return q_; }
  const std::vector<double>& dq() const { return dq_; }

  /// Largest |Q'' + (d-1)/r Q' - Q + Q^p| over interior nodes, with Q'' taken
  /// by finite differences of the stored derivative.
  double residual_max() const { return residual_max_; }
  /// Relative spread of Q r^{(d-1)/2} e^r over [r_max/2, r_max].
  double tail_drift() const { return tail_drift_; }
  /// Tail constant obtained from the two-sided matching, before the plateau fit.
  double c_matched() const { return c_matched_; }

  double Q(double r) const;
  double dQ(double r) const;
  std::pair<double, double> eval(double r) const;
  /// ln Q(r), accurate beyond the range where Q underflows.
  double log_Q(double r) const;

  nlohmann::json to_json() const;
  static GroundState from_json(const nlohmann::json& j);

 private:
  friend GroundState solve_ground_state(const ProblemParams&, double, const GroundStateOptions&);

  void finalize_samples();
  std::size_t interval(double r) const;

  ProblemParams params_;
  double tol_ = 0.0;
  double r_max_ = 0.0;
  double c_Q_ = 0.0;
  double c_matched_ = 0.0;
  double residual_max_ = 0.0;
  double tail_drift_ = 0.0;
  std::vector<double> r_, q_, dq_, d2q_;
  std::size_t uniform_start_ = 0;
  double uniform_h_ = 0.0;
};

/// Ground state of Q'' + (d-1)/r Q' - Q + Q^p = 0 by shooting on Q(0).
GroundState solve_ground_state(const ProblemParams& params, double tol,
                               const GroundStateOptions& opts = {});

/// Q(r) r^{(d-1)/2} e^r sampled over a window, used for c_Q fitting.
struct TailFit {
  double c = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  double rms = 0.0;
  double drift = 0.0;
};

TailFit fit_tail_plateau(const std::vector<double>& r, const std::vector<double>& q, int d,
                         double r_lo, double r_hi);

/// Exponent k in Q r^{(d-1)/2} e^r - c_Q ~ r^k fitted over [r_lo, r_hi].
double tail_correction_exponent(const GroundState& gs, double r_lo, double r_hi);

/// Closed form of the one-dimensional ground state.
double closed_form_Q_1d(double p, double x);
double closed_form_dQ_1d(double p, double x);

/// Weights of the k-th derivative at x0 from nodes x (Fornberg's recursion).
std::vector<double> fd_weights(double x0, const std::vector<double>& x, int k);

}  // namespace solistab
