#include "solistab/groundstate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/numeric/odeint.hpp>

#include "solistab/errors.hpp"

namespace solistab {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<double, 2>;

constexpr double kRelTol = 1e-13;
constexpr int kBisectionCap = 200;
constexpr int kNewtonCap = 40;
constexpr double kMatchLevel = 1e-3;

struct RadialOde {
  int d;
  double p;
  void operator()(const State& x, State& dxdt, double r) const {
    const double q = x[0];
    const double nl = std::pow(std::abs(q), p - 1.0) * q;
    dxdt[0] = x[1];
    dxdt[1] = (d == 1 ? 0.0 : -(d - 1) / r * x[1]) + q - nl;
  }
};

// The ODE at r = 0 has a removable singularity; d = 1 has none.
double start_radius(int d, double eps) { return d == 1 ? 0.0 : eps; }

State start_state(int d, double p, double a, double eps) {
  if (d == 1) return {a, 0.0};
  const double b = a * (1.0 - std::pow(a, p - 1.0)) / (2.0 * d);
  return {a + b * eps * eps, 2.0 * b * eps};
}

// Decaying solution of the linearized equation, normalized to
// r^{-(d-1)/2} e^{-r} at infinity.
std::pair<double, double> linear_tail(int d, double r) {
  const double nu = 0.5 * (d - 2);
  const double s = std::sqrt(2.0 / M_PI) * std::pow(r, -nu);
  const double k0 = boost::math::cyl_bessel_k(nu, r);
  const double k1 = boost::math::cyl_bessel_k(nu + 1.0, r);
  return {s * k0, -s * k1};
}

enum class Shot { TooLarge, TooSmall, Undetermined };

struct ShotResult {
  Shot kind = Shot::Undetermined;
  double r_stop = 0.0;
  double r_match = 0.0;
};

ShotResult classify(const RadialOde& ode, double a, double eps, double r_end) {
  auto stepper = odeint::make_dense_output(1e-16, kRelTol, odeint::runge_kutta_dopri5<State>());
  const double r0 = start_radius(ode.d, eps);
  stepper.initialize(start_state(ode.d, ode.p, a, eps), r0, 1e-3);
  ShotResult out;
  while (stepper.current_time() < r_end) {
    stepper.do_step(ode);
    const State& x = stepper.current_state();
    const double r = stepper.current_time();
    if (out.r_match == 0.0 && x[0] < kMatchLevel * a) out.r_match = r;
    if (x[0] < 0.0) {
      out.kind = Shot::TooLarge;
      out.r_stop = r;
      return out;
    }
    if (x[1] > 0.0) {
      out.kind = Shot::TooSmall;
      out.r_stop = r;
      return out;
    }
  }
  out.r_stop = r_end;
  return out;
}

State integrate_out(const RadialOde& ode, double a, double eps, double r_s) {
  State x = start_state(ode.d, ode.p, a, eps);
  odeint::integrate_adaptive(
      odeint::make_controlled(1e-16, kRelTol, odeint::runge_kutta_dopri5<State>()), ode, x,
      start_radius(ode.d, eps), r_s, 1e-3);
  return x;
}

State tail_state(int d, double c, double r_max) {
  const auto [g, dg] = linear_tail(d, r_max);
  return {c * g, c * dg};
}

State integrate_in(const RadialOde& ode, double c, double r_max, double r_s) {
  State x = tail_state(ode.d, c, r_max);
  odeint::integrate_adaptive(
      odeint::make_controlled(1e-300, kRelTol, odeint::runge_kutta_dopri5<State>()), ode, x,
      r_max, r_s, -1e-2);
  return x;
}

std::vector<double> build_grid(double h, double r_max, std::size_t& uniform_start) {
  std::vector<double> r{0.0};
  double x = std::min(1e-4, 0.1 * h);
  while (0.1 * x < h && x < 1.0) {
    r.push_back(x);
    x *= 1.1;
  }
  uniform_start = r.size() - 1;
  const double r_us = r.back();
  const auto k_max = static_cast<std::size_t>(std::llround((r_max - r_us) / h));
  for (std::size_t k = 1; k <= k_max; ++k) r.push_back(r_us + static_cast<double>(k) * h);
  return r;
}

double ode_second_derivative(int d, double p, double r, double q, double dq) {
  const double nl = std::pow(std::abs(q), p - 1.0) * q;
  if (r == 0.0) return (q - nl) / d;
  return -(d - 1) / r * dq + q - nl;
}

}  // namespace

void ProblemParams::validate() const {
  if (d < 1) throw std::invalid_argument("dimension must be at least 1");
  if (!(p > 1.0)) throw std::invalid_argument("exponent must exceed 1");
  if (d >= 3) {
    const double crit = (d + 2.0) / (d - 2.0);
    if (!(p < crit)) throw std::invalid_argument("exponent must be below the critical exponent");
  } else if (p > kMaxExponent) {
    throw std::invalid_argument("exponent above the configured cap");
  }
}

double default_r_max(double tol) { return std::max(40.0, 25.0 + 5.0 * std::log(1.0 / tol)); }

std::vector<double> fd_weights(double x0, const std::vector<double>& x, int k) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<double>> c(n, std::vector<double>(k + 1, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, k);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int s = mn; s >= 1; --s) c[i][s] = c1 * (s * c[i - 1][s - 1] - c5 * c[i - 1][s]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int s = mn; s >= 1; --s) c[j][s] = (c4 * c[j][s] - s * c[j][s - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][k];
  return w;
}

TailFit fit_tail_plateau(const std::vector<double>& r, const std::vector<double>& q, int d,
                         double r_lo, double r_hi) {
  std::vector<double> rs, ys;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] < r_lo || r[i] > r_hi) continue;
    rs.push_back(r[i]);
    ys.push_back(q[i] * std::exp(0.5 * (d - 1) * std::log(r[i]) + r[i]));
  }
  if (rs.size() < 8) throw NumericalError(ErrorKind::TailNotResolved, "too few samples in the tail window");
  const auto n = static_cast<Eigen::Index>(rs.size());
  Eigen::MatrixXd A(n, 4);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = 1.0 / rs[i];
    A(i, 0) = 1.0;
    A(i, 1) = u;
    A(i, 2) = u * u;
    A(i, 3) = u * u * u;
    y(i) = ys[i];
  }
  const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(y);
  TailFit fit;
  fit.c = coef(0);
  fit.b1 = coef(1);
  fit.b2 = coef(2);
  fit.rms = std::sqrt((A * coef - y).squaredNorm() / static_cast<double>(n));
  const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
  fit.drift = (*hi - *lo) / std::abs(fit.c);
  return fit;
}

double tail_correction_exponent(const GroundState& gs, double r_lo, double r_hi) {
  const int d = gs.d();
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < gs.r().size(); ++i) {
    const double r = gs.r()[i];
    if (r < r_lo || r > r_hi) continue;
    const double prod = gs.q()[i] * std::exp(0.5 * (d - 1) * std::log(r) + r);
    const double dev = std::abs(prod - gs.c_Q());
    if (dev <= 0.0) continue;
    lx.push_back(std::log(r));
    ly.push_back(std::log(dev));
  }
  if (lx.size() < 3) throw NumericalError(ErrorKind::TailNotResolved, "tail deviation below resolution");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(lx.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

double closed_form_Q_1d(double p, double x) {
  const double ch = std::cosh(0.5 * (p - 1.0) * x);
  return std::pow((p + 1.0) / (2.0 * ch * ch), 1.0 / (p - 1.0));
}

double closed_form_dQ_1d(double p, double x) {
  return -closed_form_Q_1d(p, x) * std::tanh(0.5 * (p - 1.0) * x);
}

GroundState solve_ground_state(const ProblemParams& params, double tol, const GroundStateOptions& opts) {
  params.validate();
  if (!(tol >= 1e-14 && tol <= 1e-4)) throw std::invalid_argument("tol must lie in [1e-14, 1e-4]");
  if (!(opts.output_h > 0.0 && opts.output_h <= 0.25)) throw std::invalid_argument("output_h must lie in (0, 0.25]");
  const double r_max_req = opts.r_max > 0.0 ? opts.r_max : default_r_max(tol);
  if (r_max_req < 10.0) throw std::invalid_argument("r_max must be at least 10");
  std::size_t uniform_start = 0;
  std::vector<double> grid = build_grid(opts.output_h, r_max_req, uniform_start);
  const double r_max = grid.back();

  const RadialOde ode{params.d, params.p};
  const double eps = opts.eps;

  // Bracket: a <= 1 always turns upward; grow the upper end until Q crosses zero.
  double lo = 1.0;
  double hi = 2.0;
  ShotResult shot_lo;
  for (int k = 0;; ++k) {
    const ShotResult s = classify(ode, hi, eps, r_max);
    if (s.kind == Shot::TooLarge) break;
    if (k > 40) throw NumericalError(ErrorKind::NoBracket, "no sign change of Q for Q(0) up to 2^40");
    lo = hi;
    shot_lo = s;
    hi *= 2.0;
  }
  int iter = 0;
  while (hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi) {
    if (++iter > kBisectionCap) throw NumericalError(ErrorKind::NonConvergence, "bisection iteration cap");
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const ShotResult s = classify(ode, mid, eps, r_max);
    if (s.kind == Shot::TooLarge) {
      hi = mid;
    } else if (s.kind == Shot::TooSmall) {
      lo = mid;
      shot_lo = s;
    } else {
      lo = hi = mid;
      shot_lo = s;
    }
  }
  if (hi - lo > tol * hi) throw NumericalError(ErrorKind::NonConvergence, "bracket not narrowed below tol");

  double a = 0.5 * (lo + hi);
  double r_s = shot_lo.r_match;
  if (r_s <= 0.0 || r_s > 0.7 * shot_lo.r_stop) r_s = 0.7 * shot_lo.r_stop;
  r_s = std::clamp(r_s, 1.0, 0.5 * r_max);

  const State x_out0 = integrate_out(ode, a, eps, r_s);
  const auto g_s = linear_tail(params.d, r_s);
  double c = x_out0[0] / g_s.first;

  // Two-sided matching of (Q, Q') at r_s in the unknowns (Q(0), c).
  auto mismatch = [&](double aa, double cc) {
    const State o = integrate_out(ode, aa, eps, r_s);
    const State i = integrate_in(ode, cc, r_max, r_s);
    return std::array<double, 2>{o[0] - i[0], o[1] - i[1]};
  };
  bool converged = false;
  double scale = std::abs(x_out0[0]);
  std::array<double, 2> F = mismatch(a, c);
  for (int it = 0; it < kNewtonCap; ++it) {
    const double da = 1e-7 * a;
    const double dc = 1e-7 * c;
    const auto Fa1 = mismatch(a + da, c), Fa0 = mismatch(a - da, c);
    const auto Fc1 = mismatch(a, c + dc), Fc0 = mismatch(a, c - dc);
    const double J00 = (Fa1[0] - Fa0[0]) / (2 * da), J10 = (Fa1[1] - Fa0[1]) / (2 * da);
    const double J01 = (Fc1[0] - Fc0[0]) / (2 * dc), J11 = (Fc1[1] - Fc0[1]) / (2 * dc);
    const double det = J00 * J11 - J01 * J10;
    if (det == 0.0 || !std::isfinite(det)) break;
    const double step_a = -(J11 * F[0] - J01 * F[1]) / det;
    const double step_c = -(-J10 * F[0] + J00 * F[1]) / det;
    a += step_a;
    c += step_c;
    F = mismatch(a, c);
    if (std::abs(step_a) <= 1e-15 * a && std::abs(step_c) <= 1e-12 * std::abs(c)) {
      converged = true;
      break;
    }
  }
  const double mis = std::max(std::abs(F[0]), std::abs(F[1])) / scale;
  if (!converged && !(mis < 1e-10)) throw NumericalError(ErrorKind::NonConvergence, "tail matching did not converge");

  GroundState gs;
  gs.params_ = params;
  gs.tol_ = tol;
  gs.r_ = std::move(grid);
  gs.uniform_start_ = uniform_start;
  gs.uniform_h_ = opts.output_h;
  gs.r_max_ = r_max;
  const std::size_t N = gs.r_.size();
  gs.q_.assign(N, 0.0);
  gs.dq_.assign(N, 0.0);

  // Resample the matched solution on the output grid: outward below r_s, inward above.
  const double r0 = start_radius(params.d, eps);
  std::vector<double> t_out{r0};
  std::vector<std::size_t> idx_out;
  std::vector<double> t_in;
  std::vector<std::size_t> idx_in;
  for (std::size_t i = 0; i < N; ++i) {
    const double r = gs.r_[i];
    if (r <= r0) {
      const double b = a * (1.0 - std::pow(a, params.p - 1.0)) / (2.0 * params.d);
      gs.q_[i] = a + b * r * r;
      gs.dq_[i] = 2.0 * b * r;
    } else if (r <= r_s) {
      t_out.push_back(r);
      idx_out.push_back(i);
    }
  }
  for (std::size_t i = N; i-- > 0;) {
    if (gs.r_[i] <= r_s) break;
    t_in.push_back(gs.r_[i]);
    idx_in.push_back(i);
  }
  if (!idx_out.empty()) {
    State x = start_state(params.d, params.p, a, eps);
    std::size_t k = 0;
    auto obs = [&](const State& s, double t) {
      if (t == r0) return;
      gs.q_[idx_out[k]] = s[0];
      gs.dq_[idx_out[k]] = s[1];
      ++k;
    };
    odeint::integrate_times(odeint::make_dense_output(1e-16, kRelTol, odeint::runge_kutta_dopri5<State>()),
                            ode, x, t_out.begin(), t_out.end(), 1e-3, obs);
  }
  if (!idx_in.empty()) {
    State x = tail_state(params.d, c, r_max);
    std::size_t k = 0;
    auto obs = [&](const State& s, double) {
      gs.q_[idx_in[k]] = s[0];
      gs.dq_[idx_in[k]] = s[1];
      ++k;
    };
    odeint::integrate_times(odeint::make_dense_output(1e-300, kRelTol, odeint::runge_kutta_dopri5<State>()),
                            ode, x, t_in.begin(), t_in.end(), -1e-2, obs);
  }
  gs.q_[0] = a;
  gs.dq_[0] = 0.0;
  gs.c_matched_ = c;

  for (std::size_t i = 1; i < N; ++i) {
    if (!(gs.q_[i] > 0.0 && gs.q_[i] < gs.q_[i - 1] && gs.dq_[i] < 0.0))
      throw NumericalError(ErrorKind::NonConvergence, "profile lost positivity or monotonicity");
  }

  gs.finalize_samples();

  const TailFit fit = fit_tail_plateau(gs.r_, gs.q_, params.d, 0.5 * gs.r_max_, gs.r_max_);
  if (fit.rms > 1e-6 * fit.c || std::abs(fit.c - c) > 1e-6 * c)
    throw NumericalError(ErrorKind::TailNotResolved, "tail plateau not resolved; increase r_max");
  gs.c_Q_ = fit.c;
  gs.tail_drift_ = fit.drift;
  return gs;
}

void GroundState::finalize_samples() {
  const std::size_t N = r_.size();
  const int d = params_.d;
  const double p = params_.p;
  d2q_.resize(N);
  for (std::size_t i = 0; i < N; ++i) d2q_[i] = ode_second_derivative(d, p, r_[i], q_[i], dq_[i]);

  // Independent residual: differentiate the sampled Q' numerically.
  constexpr std::size_t kHalf = 3;
  residual_max_ = 0.0;
  std::vector<double> nodes(2 * kHalf + 1);
  for (std::size_t i = 1; i + 1 < N; ++i) {
    const std::size_t s = std::min(i >= kHalf ? i - kHalf : 0, N - nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) nodes[j] = r_[s + j];
    const auto w = fd_weights(r_[i], nodes, 1);
    double qpp = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) qpp += w[j] * dq_[s + j];
    const double nl = std::pow(q_[i], p);
    const double res = qpp + (d - 1) / r_[i] * dq_[i] - q_[i] + nl;
    residual_max_ = std::max(residual_max_, std::abs(res));
  }
}

std::size_t GroundState::interval(double r) const {
  const std::size_t N = r_.size();
  if (r >= r_[uniform_start_]) {
    const auto k = static_cast<std::size_t>((r - r_[uniform_start_]) / uniform_h_);
    std::size_t i = std::min(uniform_start_ + k, N - 2);
    while (i + 2 < N && r_[i + 1] < r) ++i;
    while (i > 0 && r_[i] > r) --i;
    return i;
  }
  const auto it = std::upper_bound(r_.begin(), r_.begin() + static_cast<std::ptrdiff_t>(uniform_start_) + 1, r);
  return static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - r_.begin() - 1, 0));
}

std::pair<double, double> GroundState::eval(double r) const {
  if (r < 0.0) r = -r;
  const int d = params_.d;
  if (r > r_max_) {
    const double v = c_Q_ * std::pow(r, -0.5 * (d - 1)) * std::exp(-r);
    return {v, -v * (1.0 + 0.5 * (d - 1) / r)};
  }
  const std::size_t i = interval(r);
  const double h = r_[i + 1] - r_[i];
  const double t = (r - r_[i]) / h;
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  const double H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
  const double H1 = t - 6 * t3 + 8 * t4 - 3 * t5;
  const double H2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
  const double H3 = 10 * t3 - 15 * t4 + 6 * t5;
  const double H4 = -4 * t3 + 7 * t4 - 3 * t5;
  const double H5 = 0.5 * (t3 - 2 * t4 + t5);
  const double dH0 = -30 * t2 + 60 * t3 - 30 * t4;
  const double dH1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
  const double dH2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
  const double dH3 = 30 * t2 - 60 * t3 + 30 * t4;
  const double dH4 = -12 * t2 + 28 * t3 - 15 * t4;
  const double dH5 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
  const double f0 = q_[i], f1 = q_[i + 1];
  const double g0 = h * dq_[i], g1 = h * dq_[i + 1];
  const double s0 = h * h * d2q_[i], s1 = h * h * d2q_[i + 1];
  const double v = f0 * H0 + g0 * H1 + s0 * H2 + f1 * H3 + g1 * H4 + s1 * H5;
  const double dv = (f0 * dH0 + g0 * dH1 + s0 * dH2 + f1 * dH3 + g1 * dH4 + s1 * dH5) / h;
  return {v, dv};
}

double GroundState::Q(double r) const { return eval(r).first; }
double GroundState::dQ(double r) const { return eval(r).second; }

double GroundState::log_Q(double r) const {
  r = std::abs(r);
  if (r > r_max_) return std::log(c_Q_) - 0.5 * (params_.d - 1) * std::log(r) - r;
  return std::log(Q(r));
}

nlohmann::json GroundState::to_json() const {
  nlohmann::json j;
  j["format"] = "solistab.ground_state";
  j["version"] = 1;
  j["d"] = params_.d;
  j["p"] = params_.p;
  j["tol"] = tol_;
  j["r_max"] = r_max_;
  j["c_Q"] = c_Q_;
  j["c_matched"] = c_matched_;
  j["q0"] = q_.front();
  j["residual_max"] = residual_max_;
  j["tail_drift"] = tail_drift_;
  j["integrator"] = {{"method", "dopri5"}, {"order", 5}, {"rtol", kRelTol}};
  j["uniform_start"] = uniform_start_;
  j["output_h"] = uniform_h_;
  j["r"] = r_;
  j["q"] = q_;
  j["dq"] = dq_;
  return j;
}

GroundState GroundState::from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "solistab.ground_state" || j.value("version", 0) != 1)
    throw std::invalid_argument("not a version 1 ground state document");
  GroundState gs;
  gs.params_.d = j.at("d").get<int>();
  gs.params_.p = j.at("p").get<double>();
  gs.params_.validate();
  gs.tol_ = j.at("tol").get<double>();
  gs.r_max_ = j.at("r_max").get<double>();
  gs.c_Q_ = j.at("c_Q").get<double>();
  gs.c_matched_ = j.value("c_matched", gs.c_Q_);
  gs.tail_drift_ = j.value("tail_drift", 0.0);
  gs.uniform_start_ = j.at("uniform_start").get<std::size_t>();
  gs.uniform_h_ = j.at("output_h").get<double>();
  gs.r_ = j.at("r").get<std::vector<double>>();
  gs.q_ = j.at("q").get<std::vector<double>>();
  gs.dq_ = j.at("dq").get<std::vector<double>>();
  if (gs.r_.size() < 8 || gs.q_.size() != gs.r_.size() || gs.dq_.size() != gs.r_.size() ||
      gs.uniform_start_ >= gs.r_.size())
    throw std::invalid_argument("inconsistent ground state arrays");
  gs.finalize_samples();
  return gs;
}

}  // namespace solistab
