#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "solistab/groundstate.hpp"

namespace solistab {

/// A real number held as sign and log-magnitude.
struct LogValue {
  double log_abs = -std::numeric_limits<double>::infinity();
  int sign = 0;
  double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

struct QuadOptions {
  double rel_tol = 1e-10;
  unsigned max_depth = 20;
};

/// Integral over R^d of K(|x|, |x + R e1|, cos angle(x, e1)), evaluated through the
/// rotational reduction to (r, t). The kernel must return values scaled by e^{-log_scale};
/// the result is returned unscaled in log form.
LogValue pair_integral(int d, double R, double log_scale,
                       const std::function<double(double r, double t, double c)>& kernel,
                       const QuadOptions& opts = {});

/// ln of the integral of Q^alpha(x) Q^beta(x + R e1).
double overlap_integral(const GroundState& gs, double alpha, double beta, double R, const QuadOptions& opts = {});
/// ln of the integral of Q^2(x) Q^2(x + R e1).
double square_square_integral(const GroundState& gs, double R, const QuadOptions& opts = {});
/// ln of the integral of |(Q + Q(. + R e1))^p - Q^p - Q(. + R e1)^p|^2 for 1 < p < 2.
double subquadratic_cross_norm(const GroundState& gs, double R, const QuadOptions& opts = {});
/// First component of the integral of Q^{p-1} grad Q (x) Q(x + R e1).
LogValue gradient_overlap(const GroundState& gs, double R, const QuadOptions& opts = {});
/// (c_Q / p) times the integral of e^{-x1} Q^p.
double cbar(const GroundState& gs);

/// ln of the leading-order prediction used to scale each integrand.
double predicted_log_overlap(int d, double alpha, double beta, double R);
double predicted_log_square_square(int d, double R);
double predicted_log_subquadratic(int d, double p, double R);
double predicted_log_gradient(int d, double R);

enum class FitModel {
  Plain,          // rate R + power ln R + c
  InverseR,       // plus k / R
  ShiftedLog,     // rate R + power ln(R + b) + c, b searched
  LogLog,         // rate R + power ln R + ln(ln R + b) + c, b searched
  SqrtEndpoint,   // rate R + power ln R + ln(1 + b / sqrt R) + c, b searched
  NonlinearTail,  // plus k1 e^{-kappa R} + (k2 + k3 R) e^{-2 kappa R} + (k4 + k5 R) e^{-3 kappa R}
  CoreTail,       // plus k1 / R + k2 R e^{-kappa R}
};

std::string_view to_string(FitModel m);
FitModel fit_model_from_string(std::string_view s);

struct AsymptoticFit {
  std::vector<double> R_values;
  std::vector<double> I_values;
  double rate = 0.0;
  double power = 0.0;
  double log_prefactor = 0.0;
  /// Coefficients of the 1/R or e^{-kappa R} correction terms.
  std::vector<double> corrections;
  /// The searched constant b of ShiftedLog, LogLog and SqrtEndpoint.
  double shift = 0.0;
  double kappa = 0.0;
  double rms_residual = 0.0;
  FitModel model = FitModel::Plain;
  bool reliable() const { return rms_residual <= 0.05; }
  /// Model prediction at R.
  double predict(double R) const;
  nlohmann::json to_json() const;
};

/// Least-squares fit of ln I(R); kappa is the decay rate for NonlinearTail.
AsymptoticFit fit_asymptotic(const std::vector<double>& R, const std::vector<double>& logI, FitModel model,
                             double kappa = 0.0);

struct SumPowerReport {
  std::string branch;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

/// Both sides of the applicable sum-power inequality for nonnegative a_k.
enum class InteractionKind { Overlap, SquareSquare, Subquadratic, Gradient };

std::string_view to_string(InteractionKind k);
InteractionKind interaction_kind_from_string(std::string_view s);

/// ln |I(R)| for the given kind; alpha and beta are used by Overlap only.
double interaction_log_value(const GroundState& gs, InteractionKind kind, double R, double alpha = 2.0,
                             double beta = 1.0, const QuadOptions& opts = {});
double predicted_log(InteractionKind kind, int d, double p, double R, double alpha = 2.0, double beta = 1.0);

/// Correction model matching the structure of each integral: Bessel 1/R tails for overlaps, 1/R
/// plus the e^{-(p-1)R} far-core term for gradients, the exact AR + B, endpoint and ln R forms for Q^2 Q^2 in d = 1, 2, 3, and the
/// e^{-(p-1)R/2} nonlinear tail of Q for the subquadratic cross term.
FitModel default_fit_model(InteractionKind kind, int d);
double default_kappa(InteractionKind kind, double p);

/// The target (rate, power) of the asymptotic law.
std::pair<double, double> expected_law(InteractionKind kind, int d, double p, double alpha = 2.0, double beta = 1.0);

SumPowerReport check_sum_power_inequalities(double p, const std::vector<double>& a);

}  // namespace solistab
