#include "solistab/construction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <unsupported/Eigen/IterativeSolvers>

#include "solistab/errors.hpp"

namespace solistab {
namespace {

// The linear map in the variable w = (1 - Delta)^{1/2} v, where the H^1 inner product of v is
// the Euclidean one of w up to a constant factor.
class ConjugatedOperator;

}  // namespace
}  // namespace solistab

namespace Eigen::internal {
template <>
struct traits<solistab::ConjugatedOperator> : public traits<Eigen::SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace solistab {
namespace {

class ConjugatedOperator : public Eigen::EigenBase<ConjugatedOperator> {
 public:
  using Scalar = double;
  using RealScalar = double;
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

  explicit ConjugatedOperator(const LinearizedOperator& op) : op_(op) {}

  Eigen::Index rows() const { return static_cast<Eigen::Index>(op_.grid().size()); }
  Eigen::Index cols() const { return rows(); }

  template <typename Rhs>
  Eigen::Product<ConjugatedOperator, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
    return Eigen::Product<ConjugatedOperator, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& w) const {
    ++applications;
    return to_vector(half(op_.apply(half(to_field(w), -1.0)), 1.0));
  }

  TorusField to_field(const Eigen::VectorXd& w) const {
    TorusField out(op_.grid(), ScalarKind::Real);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = w(static_cast<Eigen::Index>(i));
    return out;
  }

  static Eigen::VectorXd to_vector(const TorusField& v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i].real();
    return out;
  }

  // (1 - Delta)^{s/2}.
  static TorusField half(const TorusField& v, double s) {
    return apply_multiplier(v, [s](double xi2) { return std::pow(1.0 + xi2, 0.5 * s); });
  }

  mutable int applications = 0;

 private:
  const LinearizedOperator& op_;
};

}  // namespace
}  // namespace solistab

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<solistab::ConjugatedOperator, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<solistab::ConjugatedOperator, Rhs,
                                generic_product_impl<solistab::ConjugatedOperator, Rhs>> {
  using Scalar = typename Product<solistab::ConjugatedOperator, Rhs>::Scalar;
  template <typename Dest>
  static void scaleAndAddTo(Dest& dst, const solistab::ConjugatedOperator& lhs, const Rhs& rhs, const Scalar& alpha) {
    dst.noalias() += alpha * lhs.apply(rhs);
  }
};
}  // namespace Eigen::internal

namespace solistab {

LinearizedOperator::LinearizedOperator(const GroundState& gs, const SolitonConfig& cfg, const TorusGrid& grid)
    : grid_(grid), p_(gs.p()), sigma_(sample_soliton_sum(gs, cfg, grid)), basis_(gs, cfg, grid) {
  if (!cfg.is_real()) throw std::invalid_argument("the linearized operator is built for real configurations");
  weight_.resize(sigma_.size());
  for (std::size_t i = 0; i < sigma_.size(); ++i) weight_[i] = p_ * std::pow(std::abs(sigma_[i].real()), p_ - 1.0);
}

TorusField LinearizedOperator::K(const TorusField& v) const {
  if (!v.is_real()) throw std::invalid_argument("the linearized operator acts on real fields");
  TorusField w = v;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= weight_[i];
  return helmholtz_inverse(w);
}

TorusField LinearizedOperator::apply(const TorusField& v) const {
  TorusField out = v;
  out -= basis_.project_F_perp(K(v));
  return out;
}

TorusField solve_linearized(const LinearizedOperator& op, const TorusField& phi, const LinearSolveOptions& opts,
                            LinearSolveReport* report, const TorusField* guess) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  LinearSolveReport local;
  LinearSolveReport& rep = report ? *report : local;
  rep = {};
  const double phi_norm = norm(phi, Norm::H1);
  if (phi_norm == 0.0) {
    rep.method = "zero";
    return TorusField(op.grid(), ScalarKind::Real);
  }
  const double in_F = norm(op.basis().project_F(phi), Norm::H1);
  if (in_F > 1e-10 * phi_norm) throw std::invalid_argument("right-hand side is not in F perp");

  auto residual = [&](const TorusField& v) {
    TorusField r = op.apply(v);
    r -= phi;
    return norm(r, Norm::H1) / phi_norm;
  };

  // Plain iteration; it only converges when P K has spectral radius below one on F perp.
  TorusField v = guess ? *guess : phi;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.fixed_point_iterations; ++it) {
    TorusField next = phi;
    next += op.basis().project_F_perp(op.K(v));
    TorusField step = next;
    step -= v;
    const double s = norm(step, Norm::H1) / phi_norm;
    v = next;
    rep.iterations = it + 1;
    if (s <= 0.1 * opts.tol) {
      rep.method = "fixed-point";
      rep.relative_residual = residual(v);
      if (rep.relative_residual <= opts.tol) {
        rep.norm_ratio = norm(v, Norm::H1) / phi_norm;
        return v;
      }
      break;
    }
    if (s > 0.9 * prev) break;
    prev = s;
  }

  ConjugatedOperator A(op);
  Eigen::GMRES<ConjugatedOperator, Eigen::IdentityPreconditioner> gmres;
  gmres.compute(A);
  gmres.set_restart(opts.restart);
  gmres.setMaxIterations(opts.max_iterations);
  gmres.setTolerance(0.5 * opts.tol);
  const Eigen::VectorXd b = ConjugatedOperator::to_vector(ConjugatedOperator::half(phi, 1.0));
  const Eigen::VectorXd w = guess ? Eigen::VectorXd(gmres.solveWithGuess(b, ConjugatedOperator::to_vector(
                                                      ConjugatedOperator::half(*guess, 1.0))))
                                  : Eigen::VectorXd(gmres.solve(b));
  TorusField sol = ConjugatedOperator::half(A.to_field(w), -1.0);
  // Remove round-off drift into F.
  sol = op.basis().project_F_perp(sol);
  rep.method = "gmres";
  rep.iterations = static_cast<int>(gmres.iterations());
  rep.relative_residual = residual(sol);
  if (!(rep.relative_residual <= opts.tol))
    throw NumericalError(ErrorKind::SolverStalled,
                         "linearized solve stalled at relative residual " + std::to_string(rep.relative_residual));
  rep.norm_ratio = norm(sol, Norm::H1) / phi_norm;
  return sol;
}

nlohmann::json SharpReport::to_json() const {
  return {{"d", d},
          {"p", p},
          {"m", m},
          {"R", R},
          {"rho_H1", rho_H1},
          {"projected_f_H1", projected_f_H1},
          {"ratio", ratio},
          {"Gamma_u", Gamma_u},
          {"f_L2", f_L2},
          {"f_H1", f_H1},
          {"f_Hm1", f_Hm1},
          {"interaction_scale", interaction_scale},
          {"picard_iterations", picard_iterations},
          {"contraction_ratios", contraction_ratios},
          {"linear_iterations", linear_iterations},
          {"fixed_point_defect", fixed_point_defect},
          {"perp_residual", perp_residual},
          {"negative_part_H1", negative_part_H1}};
}

SharpExample build_sharp_example(const GroundState& gs, const SolitonConfig& cfg, const TorusGrid& grid,
                                 const SharpOptions& opts) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (cfg.params.d != gs.d() || cfg.params.p != gs.p())
    throw std::invalid_argument("configuration and ground state parameters differ");
  const LinearizedOperator op(gs, cfg, grid);
  const double p = gs.p();
  const TorusField f = interaction_term_f(gs, cfg, grid);
  const ModulationBasis& B = op.basis();

  SharpReport rep;
  rep.d = grid.d;
  rep.p = p;
  rep.m = cfg.m();
  rep.R = cfg.m() > 1 ? cfg.separation(grid.L) : 0.0;
  rep.interaction_scale = cfg.m() > 1 ? std::pow(rep.R, -0.5 * (grid.d - 1)) * std::exp(-rep.R) : 0.0;
  rep.f_L2 = norm(f, Norm::L2);
  rep.f_H1 = norm(f, Norm::H1);
  rep.f_Hm1 = norm(f, Norm::Hm1);

  auto source = [&](const TorusField& rho) {
    TorusField s = f;
    s += nonlinear_remainder_N(op.sigma(), rho, p, opts.dealiased);
    return B.project_F_perp(helmholtz_inverse(s));
  };

  const TorusField phi0 = B.project_F_perp(helmholtz_inverse(f));
  rep.projected_f_H1 = norm(phi0, Norm::H1);

  TorusField rho(grid, ScalarKind::Real);
  double last_step = std::numeric_limits<double>::infinity();
  int slow = 0;
  bool done = rep.projected_f_H1 == 0.0;
  for (int it = 0; !done; ++it) {
    if (it >= opts.max_iterations)
      throw NumericalError(ErrorKind::NotContracting, "Picard iteration hit the iteration cap");
    LinearSolveReport lin;
    TorusField next = it == 0 ? solve_linearized(op, phi0, opts.linear, &lin)
                              : solve_linearized(op, source(rho), opts.linear, &lin, &rho);
    rep.linear_iterations += lin.iterations;
    TorusField step = next;
    step -= rho;
    const double s = norm(step, Norm::H1);
    rho = std::move(next);
    rep.picard_iterations = it + 1;
    if (std::isfinite(last_step) && last_step > 0.0) {
      const double ratio = s / last_step;
      rep.contraction_ratios.push_back(ratio);
      slow = ratio >= opts.contraction_limit ? slow + 1 : 0;
      if (slow >= opts.contraction_window)
        throw NumericalError(ErrorKind::NotContracting,
                             "Picard step ratio stayed above " + std::to_string(opts.contraction_limit));
    }
    last_step = s;
    const double size = norm(rho, Norm::H1);
    done = s <= opts.tol * size || size == 0.0;
  }

  TorusField u = op.sigma();
  u += rho;
  rep.rho_H1 = norm(rho, Norm::H1);
  rep.ratio = rep.projected_f_H1 > 0.0 ? rep.rho_H1 / rep.projected_f_H1 : 0.0;
  rep.Gamma_u = gamma_of(u, p);
  TorusField defect = op.apply(rho);
  defect -= source(rho);
  rep.fixed_point_defect = norm(defect, Norm::H1);
  if (rep.rho_H1 > 0.0) {
    const Eigen::VectorXd g = B.inner_products(rho);
    for (Eigen::Index a = 0; a < g.size(); ++a)
      rep.perp_residual = std::max(rep.perp_residual, std::abs(g(a)) / (rep.rho_H1 * std::sqrt(B.gram()(a, a))));
  }
  rep.negative_part_H1 = positivize(u, p).negative_part_H1;
  return {std::move(u), std::move(rho), std::move(rep)};
}

Positivized positivize(const TorusField& u, double p) {
  if (!u.is_real()) throw std::invalid_argument("positivize needs a real field");
  Positivized out;
  out.u_plus = u;
  TorusField minus(u.grid(), ScalarKind::Real);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double v = u[i].real();
    out.u_plus[i] = std::max(v, 0.0);
    minus[i] = std::max(-v, 0.0);
  }
  out.negative_part_H1 = norm(minus, Norm::H1);
  out.Gamma_before = gamma_of(u, p);
  out.Gamma_after = out.negative_part_H1 > 0.0 ? gamma_of(out.u_plus, p) : out.Gamma_before;
  return out;
}

}  // namespace solistab
