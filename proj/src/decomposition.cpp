#include "solistab/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "solistab/errors.hpp"

namespace solistab {

namespace {

bool wants_complex(const TorusField& u, const SolitonConfig& cfg) { return !u.is_real() || !cfg.is_real(); }

double inner_weighted(const std::vector<double>& w, const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += w[i] * (a[i] * std::conj(b[i])).real();
  return s;
}

}  // namespace

ModulationBasis::ModulationBasis(const GroundState& gs, const SolitonConfig& cfg, const TorusGrid& grid,
                                 AmplitudeMode mode, double condition_cap)
    : grid_(grid) {
  grid.validate();
  cfg.validate(false);
  if (grid.d != gs.d()) throw std::invalid_argument("grid and ground state dimensions differ");
  complex_ = mode != AmplitudeMode::Fixed || !cfg.is_real();
  for (std::size_t i = 0; i < cfg.m(); ++i) {
    const cplx z = cfg.phases[i];
    for (int j = 0; j < grid.d; ++j) {
      TorusField g = sample_gradient(gs, cfg.centers[i], j, grid);
      g *= z;
      fields_.push_back(complex_ ? g.as_complex() : g);
      tangents_.push_back({i, Tangent::Kind::Translation, j});
    }
    if (mode == AmplitudeMode::Phase) {
      TorusField q = sample_profile(gs, cfg.centers[i], grid).as_complex();
      q *= cplx(0.0, 1.0) * z;
      fields_.push_back(q);
      tangents_.push_back({i, Tangent::Kind::Phase, -1});
    }
    if (mode == AmplitudeMode::Free) {
      TorusField q = sample_profile(gs, cfg.centers[i], grid).as_complex();
      fields_.push_back(q);
      tangents_.push_back({i, Tangent::Kind::RealAmplitude, -1});
      q *= cplx(0.0, 1.0);
      fields_.push_back(q);
      tangents_.push_back({i, Tangent::Kind::ImagAmplitude, -1});
    }
  }
  const auto xi2 = grid.xi_squared();
  const double scale = std::pow(grid.h(), grid.d) / static_cast<double>(grid.size());
  weight_.resize(xi2.size());
  for (std::size_t i = 0; i < xi2.size(); ++i) weight_[i] = (1.0 + xi2[i]) * scale;
  for (const auto& f : fields_) hats_.push_back(forward(f));
  const auto n = static_cast<Eigen::Index>(fields_.size());
  gram_.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b) gram_(a, b) = gram_(b, a) = inner_weighted(weight_, hats_[a], hats_[b]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  condition_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(condition_ < condition_cap))
    throw NumericalError(ErrorKind::IllConditioned, "modulation Gram matrix condition " + std::to_string(condition_));
  ldlt_.compute(gram_);
}

Eigen::VectorXd ModulationBasis::inner_products(const TorusField& v) const {
  if (v.grid().n != grid_.n || v.grid().d != grid_.d || v.grid().L != grid_.L)
    throw std::invalid_argument("field lives on a different grid");
  const auto vh = forward(v);
  Eigen::VectorXd out(static_cast<Eigen::Index>(fields_.size()));
  for (std::size_t a = 0; a < fields_.size(); ++a) out(static_cast<Eigen::Index>(a)) = inner_weighted(weight_, vh, hats_[a]);
  return out;
}

Eigen::VectorXd ModulationBasis::coefficients(const TorusField& v) const { return ldlt_.solve(inner_products(v)); }

TorusField ModulationBasis::combine(const Eigen::VectorXd& c) const {
  TorusField out(grid_, complex_ ? ScalarKind::Complex : ScalarKind::Real);
  for (std::size_t a = 0; a < fields_.size(); ++a) out.axpy(c(static_cast<Eigen::Index>(a)), fields_[a]);
  return out;
}

TorusField ModulationBasis::project_F(const TorusField& v) const {
  TorusField out = combine(coefficients(v));
  return v.is_real() ? out.real_part() : out.as_complex();
}

TorusField ModulationBasis::project_F_perp(const TorusField& v) const {
  TorusField out = v;
  out -= project_F(v);
  return out;
}

double modulation_distance_sq(const GroundState& gs, const TorusField& u, const SolitonConfig& cfg) {
  TorusField rho = u;
  rho -= sample_soliton_sum(gs, cfg, u.grid());
  const double n = norm(rho, Norm::H1);
  return n * n;
}

bool complex_phase_restriction_check(const SolitonConfig& cfg, double c) {
  if (cfg.m() < 2) throw std::invalid_argument("phase restriction needs at least two solitons");
  if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("threshold must lie in (0, 1]");
  bool all_pos = true, all_neg = true;
  for (std::size_t i = 0; i < cfg.m(); ++i)
    for (std::size_t j = 0; j < cfg.m(); ++j) {
      if (i == j) continue;
      const double re = (cfg.phases[j] * std::conj(cfg.phases[i])).real();
      all_pos = all_pos && re > c;
      all_neg = all_neg && re < -c;
    }
  return all_pos || all_neg;
}

std::string_view to_string(AmplitudeMode m) {
  switch (m) {
    case AmplitudeMode::Fixed: return "fixed";
    case AmplitudeMode::Phase: return "phase";
    case AmplitudeMode::Free: return "free";
  }
  return "?";
}

AmplitudeMode amplitude_mode_from_string(std::string_view s) {
  for (auto m : {AmplitudeMode::Fixed, AmplitudeMode::Phase, AmplitudeMode::Free})
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown amplitude mode: " + std::string(s));
}

nlohmann::json to_json(const SolitonConfig& cfg) {
  nlohmann::json ph = nlohmann::json::array();
  for (const auto& z : cfg.phases) ph.push_back({z.real(), z.imag()});
  return {{"d", cfg.params.d}, {"p", cfg.params.p}, {"centers", cfg.centers}, {"phases", ph}};
}

nlohmann::json DecompositionResult::to_json() const {
  nlohmann::json res = nlohmann::json::array();
  for (const auto& r : orthogonality_residuals)
    res.push_back({{"condition", r.condition}, {"soliton", r.soliton}, {"axis", r.axis}, {"value", r.value}});
  nlohmann::json amp = nlohmann::json::array();
  for (const auto& z : config.phases) amp.push_back(std::abs(z));
  return {{"config", solistab::to_json(config)},
          {"amplitudes", amp},
          {"norms",
           {{"rho_H1", norms.rho_H1},
            {"Gamma_u", norms.Gamma_u},
            {"f_L2", norms.f_L2},
            {"f_H1", norms.f_H1},
            {"f_Hm1", norms.f_Hm1}}},
          {"orthogonality_residuals", res},
          {"iterations", iterations},
          {"gradient_norm", gradient_norm},
          {"distance_trace", distance_trace}};
}

namespace {

// Orthogonality conditions in the form written for the paper's decomposition.
std::vector<OrthogonalityResidual> orthogonality(const GroundState& gs, const SolitonConfig& cfg,
                                                 const TorusField& rho, bool complex_case, AmplitudeMode mode) {
  const TorusGrid& g = rho.grid();
  const double p = gs.p();
  const double cell = std::pow(g.h(), g.d);
  std::vector<OrthogonalityResidual> out;
  for (std::size_t i = 0; i < cfg.m(); ++i) {
    const TorusField q = sample_profile(gs, cfg.centers[i], g);
    const cplx zc = std::conj(cfg.phases[i]) / std::abs(cfg.phases[i]);
    for (int j = 0; j < g.d; ++j) {
      const TorusField dq = sample_gradient(gs, cfg.centers[i], j, g);
      cplx s = 0.0;
      for (std::size_t k = 0; k < rho.size(); ++k) s += rho[k] * std::pow(q[k].real(), p - 1.0) * dq[k].real();
      s *= p * cell;
      if (complex_case)
        out.push_back({"Re p int rho conj(z_i) Q_i^{p-1} d_j Q_i", i, j, (s * zc).real()});
      else
        out.push_back({"p int rho Q_i^{p-1} d_j Q_i", i, j, s.real()});
    }
    if (mode == AmplitudeMode::Fixed) continue;
    const auto a = forward(rho), b = forward(q);
    const auto xi2 = g.xi_squared();
    cplx h1 = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) h1 += (1.0 + xi2[k]) * a[k] * std::conj(b[k]);
    h1 *= cell / static_cast<double>(a.size());
    if (mode == AmplitudeMode::Phase) {
      out.push_back({"Re (rho, i z_i Q_i)_{H^1}", i, -1, (cplx(0.0, -1.0) * zc * h1).real()});
    } else {
      out.push_back({"|int rho Q_i + grad rho grad Q_i|", i, -1, std::abs(h1)});
      cplx s = 0.0;
      for (std::size_t k = 0; k < rho.size(); ++k) s += rho[k] * std::pow(q[k].real(), p);
      out.push_back({"|int rho Q_i^p|", i, -1, std::abs(s * cell)});
    }
  }
  return out;
}

}  // namespace

DecompositionResult fit_modulation(const GroundState& gs, const TorusField& u, const SolitonConfig& init,
                                   const FitOptions& opts) {
  init.validate(false);
  if (init.params.d != gs.d() || init.params.p != gs.p())
    throw std::invalid_argument("configuration and ground state parameters differ");
  if (u.grid().d != gs.d()) throw std::invalid_argument("field and ground state dimensions differ");
  if (init.m() > 1 && init.separation(u.grid().L) < 8.0)
    throw std::invalid_argument("initial centers must be separated by at least 8");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");

  const bool complex_case = wants_complex(u, init);
  const AmplitudeMode mode = complex_case ? opts.amplitudes : AmplitudeMode::Fixed;
  const TorusGrid& grid = u.grid();
  const int d = grid.d;
  const double sep0 = init.m() > 1 ? init.separation(grid.L) : grid.L;
  const TorusField target = complex_case ? u.as_complex() : u;

  SolitonConfig cfg = init;
  if (complex_case) cfg.complex_kind = true;
  auto residual_of = [&](const SolitonConfig& c) {
    TorusField s = sample_soliton_sum(gs, c, grid);
    TorusField r = target;
    r -= complex_case ? s.as_complex() : s;
    return r;
  };

  DecompositionResult res;
  TorusField rho = residual_of(cfg);
  double dist = norm(rho, Norm::H1);
  res.distance_trace.push_back(dist);
  const double dist0 = dist;

  auto stationarity = [&](const ModulationBasis& B, const Eigen::VectorXd& g) {
    double worst = 0.0;
    for (Eigen::Index a = 0; a < g.size(); ++a) worst = std::max(worst, std::abs(g(a)) / std::sqrt(B.gram()(a, a)));
    return worst;
  };

  bool converged = false;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    ModulationBasis B(gs, cfg, grid, mode);
    const Eigen::VectorXd g = B.inner_products(rho);
    res.gradient_norm = stationarity(B, g);
    if (res.gradient_norm == 0.0) {
      converged = true;
      break;
    }
    // Gauss-Newton step: rho(theta + delta) ~ rho - sum delta_a b_a.
    const Eigen::VectorXd delta = B.coefficients(rho);
    double t = 1.0;
    bool accepted = false;
    SolitonConfig trial;
    TorusField trial_rho;
    double trial_dist = dist;
    for (int half = 0; half < 30; ++half, t *= 0.5) {
      trial = cfg;
      for (std::size_t a = 0; a < B.size(); ++a) {
        const auto& tg = B.tangents()[a];
        const double step = t * delta(static_cast<Eigen::Index>(a));
        switch (tg.kind) {
          case Tangent::Kind::Translation: trial.centers[tg.soliton][tg.axis] += step; break;
          case Tangent::Kind::Phase: trial.phases[tg.soliton] *= std::polar(1.0, step); break;
          case Tangent::Kind::RealAmplitude: trial.phases[tg.soliton] += step; break;
          case Tangent::Kind::ImagAmplitude: trial.phases[tg.soliton] += cplx(0.0, step); break;
        }
      }
      trial_rho = residual_of(trial);
      trial_dist = norm(trial_rho, Norm::H1);
      if (trial_dist < dist) {
        accepted = true;
        break;
      }
    }
    const double step_size = t * delta.cwiseAbs().maxCoeff();
    if (!accepted) {
      // No descent left at round-off level: stationary if the gradient is small.
      converged = res.gradient_norm <= opts.tol;
      break;
    }
    cfg = trial;
    rho = trial_rho;
    dist = trial_dist;
    res.distance_trace.push_back(dist);
    for (std::size_t k = 0; k < cfg.m(); ++k) {
      double moved = 0.0;
      for (int j = 0; j < d; ++j) moved += std::pow(cfg.centers[k][j] - init.centers[k][j], 2);
      if (std::sqrt(moved) > 0.25 * sep0 || dist > 2.0 * dist0 + 1e-300)
        throw NumericalError(ErrorKind::LeftBasin, "fit left the basin of the initial configuration");
    }
    if (step_size < 1e-13) {
      ModulationBasis Bn(gs, cfg, grid, mode);
      res.gradient_norm = stationarity(Bn, Bn.inner_products(rho));
      converged = res.gradient_norm <= opts.tol;
      ++it;
      break;
    }
  }
  if (!converged)
    throw NumericalError(ErrorKind::NotConverged,
                         "modulation fit stopped with gradient " + std::to_string(res.gradient_norm));

  res.iterations = it;
  res.config = cfg;
  res.rho = complex_case ? rho : rho.real_part();
  res.norms.rho_H1 = dist;
  res.orthogonality_residuals = orthogonality(gs, cfg, rho, complex_case, mode);
  if (opts.with_norms) {
    res.norms.Gamma_u = gamma_of(u, gs.p());
    const TorusField f = interaction_term_f(gs, cfg, grid);
    res.norms.f_L2 = norm(f, Norm::L2);
    res.norms.f_H1 = norm(f, Norm::H1);
    res.norms.f_Hm1 = norm(f, Norm::Hm1);
  }
  return res;
}

}  // namespace solistab
