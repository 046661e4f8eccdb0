#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "solistab/decomposition.hpp"
#include "solistab/fields.hpp"
#include "solistab/groundstate.hpp"

namespace solistab {

/// v -> v - P_{F perp} K v with K v = p (-Delta + 1)^{-1} (|sigma|^{p-1} v), real fields only.
class LinearizedOperator {
 public:
  LinearizedOperator(const GroundState& gs, const SolitonConfig& cfg, const TorusGrid& grid);

  TorusField apply(const TorusField& v) const;
  TorusField K(const TorusField& v) const;
  const ModulationBasis& basis() const { return basis_; }
  const TorusField& sigma() const { return sigma_; }
  const TorusGrid& grid() const { return grid_; }
  double p() const { return p_; }

 private:
  TorusGrid grid_;
  double p_;
  TorusField sigma_;
  std::vector<double> weight_;
  ModulationBasis basis_;
};

struct LinearSolveOptions {
  double tol = 1e-12;
  int restart = 60;
  int max_iterations = 600;
  /// Plain iteration v <- phi + P_{F perp} K v tried before the Krylov solver.
  int fixed_point_iterations = 30;
};

struct LinearSolveReport {
  /// "zero", "fixed-point" or "gmres".
  std::string method;
  int iterations = 0;
  double relative_residual = 0.0;
  /// ||v||_{H^1} / ||phi||_{H^1}.
  double norm_ratio = 0.0;
};

/// Solves (id - P_{F perp} K) v = phi for phi in F perp. Throws SolverStalled when the H^1
/// residual stays above tol ||phi||. A guess, when given, starts the Krylov solver.
TorusField solve_linearized(const LinearizedOperator& op, const TorusField& phi, const LinearSolveOptions& opts = {},
                            LinearSolveReport* report = nullptr, const TorusField* guess = nullptr);

struct SharpOptions {
  /// Picard stops when ||rho_{n+1} - rho_n||_{H^1} <= tol ||rho_{n+1}||_{H^1}.
  double tol = 1e-10;
  int max_iterations = 100;
  double contraction_limit = 0.95;
  int contraction_window = 5;
  bool dealiased = false;
  LinearSolveOptions linear;
};

struct SharpReport {
  int d = 0;
  double p = 0.0;
  std::size_t m = 0;
  double R = 0.0;
  double rho_H1 = 0.0;
  /// ||P_{F perp} (-Delta + 1)^{-1} f||_{H^1}.
  double projected_f_H1 = 0.0;
  double ratio = 0.0;
  double Gamma_u = 0.0;
  double f_L2 = 0.0;
  double f_H1 = 0.0;
  double f_Hm1 = 0.0;
  /// R^{-(d-1)/2} e^{-R}.
  double interaction_scale = 0.0;
  int picard_iterations = 0;
  std::vector<double> contraction_ratios;
  int linear_iterations = 0;
  /// ||rho - P K rho - P (-Delta + 1)^{-1}(f + N(rho))||_{H^1} at the returned rho.
  double fixed_point_defect = 0.0;
  /// max_a |(rho, b_a)_{H^1}| / (||rho|| ||b_a||).
  double perp_residual = 0.0;
  double negative_part_H1 = 0.0;

  nlohmann::json to_json() const;
};

struct SharpExample {
  TorusField u;
  TorusField rho;
  SharpReport report;
};

/// Builds u = sigma + rho with rho in F perp solving the projected fixed-point equation by
/// Picard iteration. Throws NotContracting when the step ratio stays at or above the limit for
/// the configured window of consecutive steps.
SharpExample build_sharp_example(const GroundState& gs, const SolitonConfig& cfg, const TorusGrid& grid,
                                 const SharpOptions& opts = {});

struct Positivized {
  TorusField u_plus;
  double negative_part_H1 = 0.0;
  double Gamma_before = 0.0;
  double Gamma_after = 0.0;
};

/// u^+ = max(u, 0) with the H^1 size of the discarded negative part.
Positivized positivize(const TorusField& u, double p);

}  // namespace solistab
