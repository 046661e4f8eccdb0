#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "solistab/construction.hpp"
#include "solistab/decomposition.hpp"
#include "solistab/fields.hpp"
#include "solistab/groundstate.hpp"

namespace solistab {

/// One point of a sweep: the quantities entering the stability estimates.
struct SweepRecord {
  int d = 0;
  double p = 0.0;
  std::size_t m = 0;
  /// Minimum center distance (0 for m = 1).
  double R = 0.0;
  /// Perturbation size for perturbed-sum sweeps, 0 otherwise.
  double eps = 0.0;
  double Gamma_u = 0.0;
  /// ||rho||_{H^1} at the fitted decomposition.
  double dist = 0.0;
  double F_of_Gamma = 0.0;
  double f_L2 = 0.0;
  double f_H1 = 0.0;
  double f_Hm1 = 0.0;
  /// R^{-(d-1)/2} e^{-R} (0 for m = 1).
  double lower_bound_lhs = 0.0;
  /// ||P_{F perp} (-Delta + 1)^{-1} f||_{H^1} (sharp examples only).
  double projected_f_H1 = 0.0;
  /// ||h(sigma) + f||_{H^{-1}} at the fitted configuration.
  double identity_residual = 0.0;
  double max_orthogonality_residual = 0.0;
  int n = 0;
  double L = 0.0;
  std::vector<std::string> flags;

  double dist_over_F() const;
  double dist_over_Gamma() const;
  nlohmann::json to_json() const;
};

/// CSV columns of a sweep, in order.
std::vector<std::string> sweep_csv_header();
void write_sweep_csv(const std::string& path, const std::vector<SweepRecord>& records);

/// A sequence of implied constants and whether it passes its test.
struct BracketCheck {
  std::string name;
  std::vector<double> values;
  double lo = 0.0;
  double hi = 0.0;
  /// Description of the test, e.g. "hi/lo < 5".
  std::string rule;
  bool pass = false;
  bool skipped = false;

  nlohmann::json to_json() const;
};

struct VerifyReport {
  std::string name;
  bool pass = false;
  std::vector<BracketCheck> checks;
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
};

struct SweepOptions {
  /// Target grid spacing; 0 picks 0.025, 0.25, 0.35 for d = 1, 2, 3.
  double h = 0.0;
  /// Points per axis; 0 derives it from h as a power of two.
  int n = 0;
  /// The box must contain every point where a soliton exceeds this value; 0 picks 1e-12 for
  /// d = 1 and 1e-10 otherwise.
  double tail = 0.0;
  /// Largest grid accepted, in points, before SweepInfeasible.
  std::size_t max_points = std::size_t{1} << 24;
  SharpOptions sharp;
  int jobs = 1;
};

/// m centers on the first axis, spacing R, symmetric about the origin.
SolitonConfig chain_config(const ProblemParams& params, std::size_t m, double R, const std::vector<cplx>& phases = {});

/// Smallest power-of-two grid with the target spacing whose box holds the configuration's tails.
TorusGrid sweep_grid(const GroundState& gs, const SolitonConfig& cfg, const SweepOptions& opts = {});

/// Fits u near cfg and fills every record field except projected_f_H1.
SweepRecord measure(const GroundState& gs, const TorusField& u, const SolitonConfig& cfg, const FitOptions& fit = {});

/// Sharp examples along an R-sweep, merged in R order.
std::vector<SweepRecord> sharp_sweep(const GroundState& gs, std::size_t m, const std::vector<double>& Rs,
                                     const SweepOptions& opts = {});

/// u = sigma(cfg) + eps w, w of unit H^1 norm, for each eps.
std::vector<SweepRecord> perturbed_sweep(const GroundState& gs, const SolitonConfig& cfg, const TorusField& w,
                                         const std::vector<double>& eps, const FitOptions& fit = {});

/// dist / F(Gamma) finite and within a factor `bracket` over the records with R in [R_lo, R_hi]
/// (all records when m = 1).
VerifyReport verify_upper_bound(const std::vector<SweepRecord>& records, double bracket = 5.0, double R_lo = 10.0,
                                double R_hi = 20.0);

/// (a) R^{-(d-1)/2} e^{-R} / Gamma and (b) dist / F(Gamma) each within a factor `bracket`.
VerifyReport verify_lower_bounds(const std::vector<SweepRecord>& records, double bracket = 3.0);

/// Implied constants of ||rho|| <~ ||f||_{L^2} + ||h||_{H^{-1}} and of
/// R^{-(d-1)/2} e^{-R} <~ ||h|| + ||rho||^2 + e^{-(1 - min(1, p(p-1)/4)) R} ||rho||^{min(p-1, 1)},
/// the three-norm ratios of f, and the h(sigma) = -f identity at every point.
VerifyReport verify_intermediate_inequalities(const std::vector<SweepRecord>& records, double lo = 0.1,
                                              double hi = 10.0, double bracket = 5.0, double identity_tol = 1e-10);

/// dist / Gamma strictly increasing along the sweep.
VerifyReport verify_sharpness_growth(const std::vector<SweepRecord>& records);

/// ||rho||/||P_{F perp}(-Delta + 1)^{-1} f|| inside [lo, hi] at every point.
VerifyReport verify_projection_ratio(const std::vector<SweepRecord>& records, double lo = 0.5, double hi = 2.0);

struct ComplexOptions {
  double c = 0.5;
  bool strict = false;
  double bracket = 5.0;
  /// Spread allowed for the single-soliton ratio sweep.
  double single_tolerance = 0.05;
  SweepOptions sweep;
};

/// u = e^{i theta}(1 + eps) Q: dist / Gamma constant in eps, and a global phase leaves dist and
/// Gamma unchanged.
VerifyReport verify_complex_single(const GroundState& gs, double theta, const std::vector<double>& eps,
                                   const ComplexOptions& opts = {});

/// Complex multi-soliton sums plus eps w: dist / Gamma bounded. p = 3 and d <= 3 are required;
/// phase-violating configurations are recorded and flagged, or rejected in strict mode.
VerifyReport verify_complex_multi(const GroundState& gs, const SolitonConfig& cfg, const std::vector<double>& eps,
                                  const ComplexOptions& opts = {}, std::vector<SweepRecord>* records = nullptr);

/// The ln^{1/2} correction of the d = 3, p = 2 square-square law: fitting with the ln ln R term
/// must lower the residual of the plain rate-power fit.
VerifyReport verify_log_correction(const GroundState& gs, const std::vector<double>& Rs);

}  // namespace solistab
