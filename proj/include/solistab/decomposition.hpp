#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "solistab/fields.hpp"
#include "solistab/groundstate.hpp"

namespace solistab {

/// Which amplitude parameters a complex fit may move: none, the phase of each z_i, or z_i freely.
enum class AmplitudeMode { Fixed, Phase, Free };

std::string_view to_string(AmplitudeMode m);
AmplitudeMode amplitude_mode_from_string(std::string_view s);

/// One tangent direction of the soliton manifold at a configuration.
struct Tangent {
  enum class Kind { Translation, Phase, RealAmplitude, ImagAmplitude };
  std::size_t soliton = 0;
  Kind kind = Kind::Translation;
  /// Axis for translations.
  int axis = 0;
};

/// Tangent fields d sigma / d theta for theta = centers and the amplitude parameters of the mode,
/// with their H^1 Gram matrix. Translations are z_i d_j Q_i, phases i z_i Q_i, free amplitudes
/// Q_i and i Q_i.
class ModulationBasis {
 public:
  ModulationBasis(const GroundState& gs, const SolitonConfig& cfg, const TorusGrid& grid, AmplitudeMode mode = AmplitudeMode::Fixed,
                  double condition_cap = 1e6);

  std::size_t size() const { return fields_.size(); }
  const std::vector<TorusField>& fields() const { return fields_; }
  const std::vector<Tangent>& tangents() const { return tangents_; }
  const Eigen::MatrixXd& gram() const { return gram_; }
  double condition() const { return condition_; }
  const TorusGrid& grid() const { return grid_; }

  /// Re (v, b_a)_{H^1} for every basis field.
  Eigen::VectorXd inner_products(const TorusField& v) const;
  /// Coefficients c with P_F v = sum c_a b_a.
  Eigen::VectorXd coefficients(const TorusField& v) const;
  TorusField combine(const Eigen::VectorXd& c) const;
  TorusField project_F(const TorusField& v) const;
  TorusField project_F_perp(const TorusField& v) const;

 private:
  TorusGrid grid_;
  bool complex_ = false;
  std::vector<TorusField> fields_;
  std::vector<std::vector<cplx>> hats_;
  std::vector<double> weight_;
  std::vector<Tangent> tangents_;
  Eigen::MatrixXd gram_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  double condition_ = 0.0;
};

struct DecompositionNorms {
  double rho_H1 = 0.0;
  double Gamma_u = 0.0;
  double f_L2 = 0.0;
  double f_H1 = 0.0;
  double f_Hm1 = 0.0;
};

struct OrthogonalityResidual {
  std::string condition;
  std::size_t soliton = 0;
  int axis = -1;
  double value = 0.0;
};

struct DecompositionResult {
  SolitonConfig config;
  TorusField rho;
  DecompositionNorms norms;
  std::vector<OrthogonalityResidual> orthogonality_residuals;
  int iterations = 0;
  /// ||u - sigma||_{H^1} after each accepted step, starting with the initial value.
  std::vector<double> distance_trace;
  /// max_a |Re (rho, b_a)_{H^1}| / ||b_a||_{H^1} at the end.
  double gradient_norm = 0.0;

  nlohmann::json to_json() const;
};

struct FitOptions {
  double tol = 1e-10;
  int max_iterations = 60;
  /// Amplitude parameters fitted for complex u; real u always keeps its phases.
  AmplitudeMode amplitudes = AmplitudeMode::Phase;
  /// Compute the f and Gamma norms (one extra field evaluation).
  bool with_norms = true;
};

/// Local minimizer of ||u - sum z_i Q(. + y_i)||_{H^1} near init by Gauss-Newton with halving.
/// Real u keeps the init phases fixed; complex u also fits the amplitudes per the mode.
DecompositionResult fit_modulation(const GroundState& gs, const TorusField& u, const SolitonConfig& init,
                                   const FitOptions& opts = {});

/// G(y) = ||u - sigma(cfg)||^2_{H^1}.
double modulation_distance_sq(const GroundState& gs, const TorusField& u, const SolitonConfig& cfg);

/// True iff all pairwise Re(z_j conj z_i) > c or all < -c.
bool complex_phase_restriction_check(const SolitonConfig& cfg, double c);

nlohmann::json to_json(const SolitonConfig& cfg);

}  // namespace solistab
