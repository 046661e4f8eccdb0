#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "solistab/groundstate.hpp"

namespace solistab {

using cplx = std::complex<double>;

/// Periodic box [-L/2, L/2)^d with n nodes per axis, stored row-major.
struct TorusGrid {
  int d = 1;
  double L = 1.0;
  int n = 64;

  /// Throws std::invalid_argument unless 1 <= d <= 3, L > 0, n >= 64 and a power of two.
  void validate() const;
  double h() const { return L / n; }
  std::size_t size() const;
  double volume() const;
  double coord(int j) const { return -0.5 * L + j * h(); }
  /// Signed integer frequency of FFT index j, in [-n/2, n/2).
  int frequency(int j) const { return j < n / 2 ? j : j - n; }
  double wavenumber(int j) const;
  /// Multi-index of a flat node index.
  void unflatten(std::size_t idx, int* out) const;
  /// |xi|^2 for every flat Fourier index.
  std::vector<double> xi_squared() const;
};

enum class ScalarKind { Real, Complex };

class TorusField {
 public:
  TorusField() = default;
  TorusField(const TorusGrid& grid, ScalarKind kind);
  TorusField(const TorusGrid& grid, ScalarKind kind, std::vector<cplx> values);

  const TorusGrid& grid() const { return grid_; }
  ScalarKind kind() const { return kind_; }
  bool is_real() const { return kind_ == ScalarKind::Real; }
  std::size_t size() const { return values_.size(); }

  std::vector<cplx>& values() { return values_; }
  const std::vector<cplx>& values() const { return values_; }
  cplx& operator[](std::size_t i) { return values_[i]; }
  const cplx& operator[](std::size_t i) const { return values_[i]; }

  TorusField& operator+=(const TorusField& o);
  TorusField& operator-=(const TorusField& o);
  TorusField& operator*=(cplx s);
  TorusField& axpy(cplx a, const TorusField& x);

  /// Drops imaginary parts and marks the field real.
  TorusField real_part() const;
  /// Same values marked complex.
  TorusField as_complex() const;
  double max_abs() const;

 private:
  TorusGrid grid_;
  ScalarKind kind_ = ScalarKind::Real;
  std::vector<cplx> values_;
};

TorusField operator+(TorusField a, const TorusField& b);
TorusField operator-(TorusField a, const TorusField& b);
TorusField operator*(cplx s, TorusField a);

TorusField sample_function(const TorusGrid& grid, ScalarKind kind,
                           const std::function<cplx(const double*)>& fn);

/// Unnormalized forward DFT coefficients V(k) = sum_j v_j e^{-2 pi i k.j/n}.
std::vector<cplx> forward(const TorusField& v);
/// Inverse of forward; a Real kind result discards imaginary round-off.
TorusField inverse(const TorusGrid& grid, ScalarKind kind, std::vector<cplx> coeffs);

enum class Norm { H1, L2, Hm1 };
std::string_view to_string(Norm n);

/// ||v||^2 = (h^d / N) sum_k (1 + |xi_k|^2)^s |V(k)|^2 with s = 1, 0, -1.
double norm(const TorusField& v, Norm which);
/// Re (u, v)_{H^1}.
double inner_h1(const TorusField& u, const TorusField& v);
/// Re (u, v)_{L^2} by the Riemann sum.
double inner_l2(const TorusField& u, const TorusField& v);
/// The same inner products on precomputed coefficient arrays.
double inner_h1_hat(const TorusGrid& grid, const std::vector<cplx>& a, const std::vector<cplx>& b);
double norm_hat(const TorusGrid& grid, const std::vector<cplx>& a, Norm which);

/// Multiplies the spectrum by fn(|xi|^2).
TorusField apply_multiplier(const TorusField& v, const std::function<double(double)>& fn);
TorusField helmholtz_inverse(const TorusField& v);
TorusField helmholtz(const TorusField& v);
TorusField laplacian(const TorusField& v);
/// Zeroes every mode with |k_j| > n/3 on some axis.
TorusField dealias(const TorusField& v);

/// Soliton centers y_k and phases z_k, so that sigma = sum z_k Q(. + y_k).
struct SolitonConfig {
  ProblemParams params;
  std::vector<std::vector<double>> centers;
  std::vector<cplx> phases;
  /// Forces a complex-valued sigma even when every phase is real.
  bool complex_kind = false;

  std::size_t m() const { return centers.size(); }
  bool is_real() const;
  /// Throws std::invalid_argument on inconsistent sizes, duplicate centers or |z| != 1.
  void validate(bool unit_phases = true) const;
  /// Minimum pairwise center distance, torus metric when L > 0.
  double separation(double L = 0.0) const;
};

/// Two centers on the first axis at -R/2 and R/2.
SolitonConfig pair_config(const ProblemParams& params, double R, cplx z1 = 1.0, cplx z2 = 1.0);

/// Largest Q value at the box boundary over all solitons.
double boundary_tail(const GroundState& gs, const SolitonConfig& cfg, const TorusGrid& grid);
/// Side length meeting the default truncation rule 4 (max |y| + 20).
double recommended_side(const SolitonConfig& cfg);
/// Throws GridTooSmall when boundary_tail exceeds the threshold.
void check_grid(const GroundState& gs, const SolitonConfig& cfg, const TorusGrid& grid,
                double threshold = 1e-8);

/// Q(|x + y|) on the torus with the minimal-image displacement.
TorusField sample_profile(const GroundState& gs, const std::vector<double>& y, const TorusGrid& grid);
/// d/dx_j of Q(|x + y|).
TorusField sample_gradient(const GroundState& gs, const std::vector<double>& y, int j,
                           const TorusGrid& grid);
TorusField sample_soliton_sum(const GroundState& gs, const SolitonConfig& cfg, const TorusGrid& grid);

/// f = |sigma|^{p-1} sigma - sum z_k Q_k^p, evaluated without cancellation for real sums.
TorusField interaction_term_f(const GroundState& gs, const SolitonConfig& cfg, const TorusGrid& grid);
/// Pointwise |u|^{p-1} u.
TorusField power_nonlinearity(const TorusField& u, double p);
/// h = -Delta u + u - |u|^{p-1} u.
TorusField residual_h(const TorusField& u, double p);
/// Gamma(u) = ||h||_{H^{-1}}.
double gamma_of(const TorusField& u, double p);

/// N(rho) = g(sigma + rho) - g(sigma) - Dg(sigma)[rho] with g(u) = |u|^{p-1} u.
TorusField nonlinear_remainder_N(const TorusField& sigma, const TorusField& rho, double p,
                                 bool dealiased = false);

/// (1 + x)^p - 1 - p x, accurate for small x; x >= -1.
double pow1p_minus_linear(double p, double x);

/// Binary snapshot: int32 d, int32 n, float64 L, int32 kind, then little-endian doubles
/// (interleaved re/im for complex fields). A JSON sidecar is written to path + ".json".
void write_field(const TorusField& v, const std::string& path, const nlohmann::json& meta = {});
TorusField read_field(const std::string& path);

struct NormRow {
  std::string label;
  double h1 = 0.0;
  double l2 = 0.0;
  double hm1 = 0.0;
};
NormRow norm_row(const std::string& label, const TorusField& v);
void write_norm_csv(const std::string& path, const std::vector<NormRow>& rows);

}  // namespace solistab
