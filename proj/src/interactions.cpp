#include "solistab/interactions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>

#include "solistab/errors.hpp"
#include "solistab/fields.hpp"

namespace solistab {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxTailPanels = 400;

// Surface measure of the unit sphere S^{d-2}.
double sphere_area(int d) {
  const double a = 0.5 * (d - 1);
  return 2.0 * std::pow(M_PI, a) / boost::math::tgamma(a);
}

double log_abs_dQ(const GroundState& gs, double r) {
  const double v = gs.dQ(r);
  if (r > gs.r_max()) return gs.log_Q(r) + std::log1p(0.5 * (gs.d() - 1) / r);
  return v == 0.0 ? kNegInf : std::log(std::abs(v));
}

struct Accumulator {
  double sum = 0.0;
  double err = 0.0;
  double l1 = 0.0;
  void add(double v, double e, double a) {
    sum += v;
    err += e;
    l1 += a;
  }
};

template <class F>
void integrate_panel(const F& f, double a, double b, const QuadOptions& opts, Accumulator& acc) {
  double err = 0.0, l1 = 0.0;
  const double v = GK::integrate(f, a, b, opts.max_depth, opts.rel_tol, &err, &l1);
  if (!std::isfinite(v)) throw NumericalError(ErrorKind::QuadratureFail, "non-finite panel integral");
  acc.add(v, err, l1);
}

// Integrates f over [start, inf) in the given direction with panels of width w until a
// panel's contribution is negligible against the running total.
template <class F>
void integrate_tail(const F& f, double start, double w, int direction, const QuadOptions& opts, Accumulator& acc) {
  for (int k = 0; k < kMaxTailPanels; ++k) {
    const double a = start + direction * k * w;
    const double b = a + direction * w;
    Accumulator panel;
    integrate_panel(f, std::min(a, b), std::max(a, b), opts, panel);
    acc.add(panel.sum, panel.err, panel.l1);
    if (panel.l1 <= 1e-18 * acc.l1) return;
  }
  throw NumericalError(ErrorKind::QuadratureFail, "tail did not decay");
}

LogValue finish(const Accumulator& acc, double log_scale) {
  if (acc.err > 1e-7 * acc.l1 + 1e-300)
    throw NumericalError(ErrorKind::QuadratureFail, "adaptive refinement stalled");
  LogValue out;
  if (acc.sum == 0.0) return out;
  out.sign = acc.sum > 0.0 ? 1 : -1;
  out.log_abs = std::log(std::abs(acc.sum)) + log_scale;
  return out;
}

}  // namespace

LogValue pair_integral(int d, double R, double log_scale,
                       const std::function<double(double, double, double)>& kernel, const QuadOptions& opts) {
  if (d < 1) throw std::invalid_argument("dimension must be at least 1");
  if (!(R > 0.0)) throw std::invalid_argument("separation must be positive");
  const double w = std::max(5.0, 0.25 * R);
  Accumulator acc;

  if (d == 1) {
    auto f = [&](double x) {
      const double c = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
      return kernel(std::abs(x), std::abs(x + R), c);
    };
    integrate_panel(f, -R, -0.5 * R, opts, acc);
    integrate_panel(f, -0.5 * R, 0.0, opts, acc);
    integrate_tail(f, 0.0, w, +1, opts, acc);
    integrate_tail(f, -R, w, -1, opts, acc);
    return finish(acc, log_scale);
  }

  const double omega = sphere_area(d);
  // Inner integral over t = |x + R e1| in [|R - r|, R + r]; each half uses t = end -+ u^2 so
  // that the sin^{d-3} endpoint factors become smooth.
  auto inner = [&](double r) {
    if (r <= 0.0) return 0.0;
    const double tmin = std::abs(R - r);
    const double tmax = R + r;
    const double mid = 0.5 * (tmin + tmax);
    const double two_rr = 2.0 * R * r;
    auto lower = [&](double u) {
      const double t = tmin + u * u;
      const double rest = std::sqrt((t + tmin) * std::max(tmax - t, 0.0) * (tmax + t));
      const double c = std::clamp((t * t - r * r - R * R) / two_rr, -1.0, 1.0);
      const double jac = 2.0 * std::pow(u, d - 2) * std::pow(rest / two_rr, d - 3) * t / (R * r);
      return jac == 0.0 ? 0.0 : jac * kernel(r, t, c);
    };
    auto upper = [&](double u) {
      const double t = tmax - u * u;
      const double rest = std::sqrt(std::max(t - tmin, 0.0) * (t + tmin) * (tmax + t));
      const double c = std::clamp((t * t - r * r - R * R) / two_rr, -1.0, 1.0);
      const double jac = 2.0 * std::pow(u, d - 2) * std::pow(rest / two_rr, d - 3) * t / (R * r);
      return jac == 0.0 ? 0.0 : jac * kernel(r, t, c);
    };
    const double ul = std::sqrt(mid - tmin);
    const double uu = std::sqrt(tmax - mid);
    double e1 = 0.0, e2 = 0.0;
    const double a = GK::integrate(lower, 0.0, ul, opts.max_depth, 0.1 * opts.rel_tol, &e1);
    const double b = GK::integrate(upper, 0.0, uu, opts.max_depth, 0.1 * opts.rel_tol, &e2);
    return a + b;
  };
  auto outer = [&](double r) { return omega * std::pow(r, d - 1) * inner(r); };
  integrate_panel(outer, 0.0, 0.5 * R, opts, acc);
  integrate_panel(outer, 0.5 * R, R, opts, acc);
  integrate_panel(outer, R, 1.5 * R, opts, acc);
  integrate_tail(outer, 1.5 * R, w, +1, opts, acc);
  return finish(acc, log_scale);
}

double predicted_log_overlap(int d, double alpha, double beta, double R) {
  const double b = std::min(alpha, beta);
  return -b * R - 0.5 * b * (d - 1) * std::log(R);
}

double predicted_log_square_square(int d, double R) {
  const double lr = std::log(R);
  switch (d) {
    case 1: return -2.0 * R + lr;
    case 2: return -2.0 * R - 0.5 * lr;
    case 3: return -2.0 * R - 2.0 * lr + std::log(lr);
    default: return -2.0 * R - (d - 1) * lr;
  }
}

double predicted_log_subquadratic(int d, double p, double R) {
  return -p * R + (0.5 - p) * (d - 1) * std::log(R);
}

double predicted_log_gradient(int d, double R) { return -R - 0.5 * (d - 1) * std::log(R); }

double overlap_integral(const GroundState& gs, double alpha, double beta, double R, const QuadOptions& opts) {
  if (!(alpha > 0.0 && beta > 0.0)) throw std::invalid_argument("exponents must be positive");
  if (!(R > 2.0)) throw std::invalid_argument("separation must exceed 2");
  const double L0 = predicted_log_overlap(gs.d(), alpha, beta, R);
  auto k = [&](double r, double t, double) { return std::exp(alpha * gs.log_Q(r) + beta * gs.log_Q(t) - L0); };
  return pair_integral(gs.d(), R, L0, k, opts).log_abs;
}

double square_square_integral(const GroundState& gs, double R, const QuadOptions& opts) {
  if (!(R > 2.0)) throw std::invalid_argument("separation must exceed 2");
  const double L0 = predicted_log_square_square(gs.d(), R);
  auto k = [&](double r, double t, double) { return std::exp(2.0 * gs.log_Q(r) + 2.0 * gs.log_Q(t) - L0); };
  return pair_integral(gs.d(), R, L0, k, opts).log_abs;
}

double subquadratic_cross_norm(const GroundState& gs, double R, const QuadOptions& opts) {
  const double p = gs.p();
  if (!(p > 1.0 && p < 2.0)) throw std::invalid_argument("subquadratic cross norm needs 1 < p < 2");
  if (!(R >= 8.0)) throw std::invalid_argument("separation must be at least 8");
  const double L0 = predicted_log_subquadratic(gs.d(), p, R);
  const double log_p = std::log(p);
  // (a + b)^p - a^p - b^p = a^p g(x), x = b / a <= 1, with
  // ln g = ln p + ln x + log1p((1+x)^p - 1 - p x) / (p x) - x^{p-1} / p).
  auto k = [&](double r, double t, double) {
    const double la = gs.log_Q(r), lb = gs.log_Q(t);
    const double hi = std::max(la, lb), lo = std::min(la, lb);
    const double lx = lo - hi;
    const double x = std::exp(lx);
    const double h1 = x > 1e-300 ? pow1p_minus_linear(p, x) / (p * x) : 0.0;
    const double h2 = std::exp((p - 1.0) * lx) / p;
    const double lg = log_p + lx + std::log1p(h1 - h2);
    return std::exp(2.0 * (p * hi + lg) - L0);
  };
  return pair_integral(gs.d(), R, L0, k, opts).log_abs;
}

LogValue gradient_overlap(const GroundState& gs, double R, const QuadOptions& opts) {
  if (!(R > 1.0)) throw std::invalid_argument("separation must exceed 1");
  const double p = gs.p();
  const double L0 = predicted_log_gradient(gs.d(), R);
  auto k = [&](double r, double t, double c) {
    if (c == 0.0) return 0.0;
    const double mag = std::exp((p - 1.0) * gs.log_Q(r) + log_abs_dQ(gs, r) + gs.log_Q(t) - L0);
    // Q' < 0, so the first gradient component has the sign of -c.
    return -c * mag;
  };
  return pair_integral(gs.d(), R, L0, k, opts);
}

double cbar(const GroundState& gs) {
  const int d = gs.d();
  const double p = gs.p();
  const double nu = 0.5 * (d - 2);
  // Spherical average of e^{-r cos theta}: (2 pi)^{d/2} r^{-nu} I_nu(r), scaled by e^{-r}.
  auto f = [&](double r) {
    if (r == 0.0) return d == 1 ? 2.0 * std::pow(gs.q0(), p) : 0.0;
    const double ang = std::pow(2.0 * M_PI, 0.5 * d) * std::pow(r, -nu) *
                       std::exp(std::log(boost::math::cyl_bessel_i(nu, r)) + p * gs.log_Q(r));
    return std::pow(r, d - 1) * ang;
  };
  QuadOptions opts;
  Accumulator acc;
  integrate_panel(f, 0.0, 10.0, opts, acc);
  integrate_tail(f, 10.0, 10.0, +1, opts, acc);
  if (acc.err > 1e-8 * acc.l1) throw NumericalError(ErrorKind::QuadratureFail, "cbar quadrature");
  return gs.c_Q() / p * acc.sum;
}

std::string_view to_string(FitModel m) {
  switch (m) {
    case FitModel::Plain: return "plain";
    case FitModel::InverseR: return "inverse_r";
    case FitModel::ShiftedLog: return "shifted_log";
    case FitModel::LogLog: return "log_log";
    case FitModel::SqrtEndpoint: return "sqrt_endpoint";
    case FitModel::NonlinearTail: return "nonlinear_tail";
    case FitModel::CoreTail: return "core_tail";
  }
  return "?";
}

FitModel fit_model_from_string(std::string_view s) {
  for (auto m : {FitModel::Plain, FitModel::InverseR, FitModel::ShiftedLog, FitModel::LogLog, FitModel::SqrtEndpoint,
                 FitModel::NonlinearTail, FitModel::CoreTail})
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown fit model " + std::string(s));
}

namespace {

// Columns beyond rate, power and intercept for the linear models.
int n_corrections(FitModel m) {
  switch (m) {
    case FitModel::InverseR: return 1;
    case FitModel::NonlinearTail: return 5;
    case FitModel::CoreTail: return 2;
    default: return 0;
  }
}

void correction_columns(FitModel m, double kappa, double R, double* c) {
  if (m == FitModel::InverseR) {
    c[0] = 1.0 / R;
  } else if (m == FitModel::NonlinearTail) {
    const double e = std::exp(-kappa * R);
    // Powers of e^{-kappa R} from the profile's tail expansion; the R factors come from the
    // orders whose midpoint integrals stop converging.
    c[0] = e;
    c[1] = e * e;
    c[2] = R * e * e;
    c[3] = e * e * e;
    c[4] = R * e * e * e;
  } else if (m == FitModel::CoreTail) {
    c[0] = 1.0 / R;
    c[1] = R * std::exp(-kappa * R);
  }
}

// The part of the model carried by the searched constant b.
double shift_term(FitModel m, double b, double R) {
  switch (m) {
    case FitModel::ShiftedLog: return 0.0;
    case FitModel::LogLog: return std::log(std::log(R) + b);
    case FitModel::SqrtEndpoint: return std::log1p(b / std::sqrt(R));
    default: return 0.0;
  }
}

}  // namespace

double AsymptoticFit::predict(double R) const {
  const double lr = model == FitModel::ShiftedLog ? std::log(R + shift) : std::log(R);
  double v = rate * R + power * lr + log_prefactor + shift_term(model, shift, R);
  if (!corrections.empty()) {
    double c[5];
    correction_columns(model, kappa, R, c);
    for (std::size_t i = 0; i < corrections.size(); ++i) v += corrections[i] * c[i];
  }
  return v;
}

nlohmann::json AsymptoticFit::to_json() const {
  return {{"model", std::string(to_string(model))},
          {"rate", rate},
          {"power", power},
          {"log_prefactor", log_prefactor},
          {"corrections", corrections},
          {"shift", shift},
          {"kappa", kappa},
          {"rms_residual", rms_residual},
          {"reliable", reliable()},
          {"R_values", R_values},
          {"log_integral", I_values}};
}

namespace {

// Linear least squares of y on the columns produced by basis(R); returns rms.
double solve_linear(const std::vector<double>& R, const std::vector<double>& y, int ncol,
                    const std::function<void(double, double*)>& basis, Eigen::VectorXd& coef) {
  const auto n = static_cast<Eigen::Index>(R.size());
  Eigen::MatrixXd A(n, ncol);
  Eigen::VectorXd b(n);
  std::vector<double> row(static_cast<std::size_t>(ncol));
  for (Eigen::Index i = 0; i < n; ++i) {
    basis(R[i], row.data());
    for (int j = 0; j < ncol; ++j) A(i, j) = row[j];
    b(i) = y[i];
  }
  coef = A.colPivHouseholderQr().solve(b);
  return std::sqrt((A * coef - b).squaredNorm() / static_cast<double>(n));
}

}  // namespace

AsymptoticFit fit_asymptotic(const std::vector<double>& R, const std::vector<double>& logI, FitModel model,
                             double kappa) {
  if (R.size() != logI.size()) throw std::invalid_argument("R and log I sizes differ");
  const int extra = n_corrections(model);
  if (R.size() < static_cast<std::size_t>(6 + extra)) throw std::invalid_argument("too few samples for the fit model");
  for (std::size_t i = 1; i < R.size(); ++i)
    if (!(R[i] > R[i - 1])) throw std::invalid_argument("R values must be strictly increasing");
  if (!(R.front() > 1.0)) throw std::invalid_argument("R values must exceed 1");
  if ((model == FitModel::NonlinearTail || model == FitModel::CoreTail) && !(kappa > 0.0))
    throw std::invalid_argument("tail correction models need kappa > 0");
  AsymptoticFit fit;
  fit.R_values = R;
  fit.I_values = logI;
  fit.model = model;
  fit.kappa = kappa;
  Eigen::VectorXd coef;

  auto rms_for = [&](double b, Eigen::VectorXd& cf) {
    std::vector<double> y(logI);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= shift_term(model, b, R[i]);
    return solve_linear(R, y, 3 + extra, [&](double r, double* c) {
      c[0] = r;
      c[1] = model == FitModel::ShiftedLog ? std::log(r + b) : std::log(r);
      c[2] = 1.0;
      correction_columns(model, kappa, r, c + 3);
    }, cf);
  };

  double lo = 0.0, hi = 0.0;
  switch (model) {
    case FitModel::ShiftedLog:
      lo = -0.95 * R.front();
      hi = 10.0 * R.back();
      break;
    case FitModel::LogLog:
      lo = -0.95 * std::log(R.front());
      hi = 50.0;
      break;
    case FitModel::SqrtEndpoint:
      lo = -0.95 * std::sqrt(R.front());
      hi = 50.0;
      break;
    default: break;
  }
  if (hi > lo) {
    // Coarse scan, then Brent on the best bracket.
    const int n = 400;
    double best_b = lo, best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd cf;
    for (int i = 0; i <= n; ++i) {
      const double b = lo + (hi - lo) * i / n;
      const double v = rms_for(b, cf);
      if (v < best) {
        best = v;
        best_b = b;
      }
    }
    const double step = (hi - lo) / n;
    auto res = boost::math::tools::brent_find_minima([&](double b) { return rms_for(b, cf); },
                                                     std::max(lo, best_b - step), std::min(hi, best_b + step), 50);
    fit.shift = res.first;
  }
  fit.rms_residual = rms_for(fit.shift, coef);
  fit.rate = coef(0);
  fit.power = coef(1);
  fit.log_prefactor = coef(2);
  for (int j = 0; j < extra; ++j) fit.corrections.push_back(coef(3 + j));
  return fit;
}

std::string_view to_string(InteractionKind k) {
  switch (k) {
    case InteractionKind::Overlap: return "overlap";
    case InteractionKind::SquareSquare: return "square-square";
    case InteractionKind::Subquadratic: return "subquadratic";
    case InteractionKind::Gradient: return "gradient";
  }
  return "?";
}

InteractionKind interaction_kind_from_string(std::string_view s) {
  for (auto k : {InteractionKind::Overlap, InteractionKind::SquareSquare, InteractionKind::Subquadratic,
                 InteractionKind::Gradient})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown interaction kind " + std::string(s));
}

double interaction_log_value(const GroundState& gs, InteractionKind kind, double R, double alpha, double beta,
                             const QuadOptions& opts) {
  switch (kind) {
    case InteractionKind::Overlap: return overlap_integral(gs, alpha, beta, R, opts);
    case InteractionKind::SquareSquare: return square_square_integral(gs, R, opts);
    case InteractionKind::Subquadratic: return subquadratic_cross_norm(gs, R, opts);
    case InteractionKind::Gradient: return gradient_overlap(gs, R, opts).log_abs;
  }
  return 0.0;
}

double predicted_log(InteractionKind kind, int d, double p, double R, double alpha, double beta) {
  switch (kind) {
    case InteractionKind::Overlap: return predicted_log_overlap(d, alpha, beta, R);
    case InteractionKind::SquareSquare: return predicted_log_square_square(d, R);
    case InteractionKind::Subquadratic: return predicted_log_subquadratic(d, p, R);
    case InteractionKind::Gradient: return predicted_log_gradient(d, R);
  }
  return 0.0;
}

FitModel default_fit_model(InteractionKind kind, int d) {
  switch (kind) {
    case InteractionKind::SquareSquare:
      if (d == 1) return FitModel::ShiftedLog;
      if (d == 2) return FitModel::SqrtEndpoint;
      if (d == 3) return FitModel::LogLog;
      return FitModel::InverseR;
    case InteractionKind::Subquadratic: return FitModel::NonlinearTail;
    case InteractionKind::Gradient: return FitModel::CoreTail;
    default: return FitModel::InverseR;
  }
}

double default_kappa(InteractionKind kind, double p) {
  if (kind == InteractionKind::Subquadratic) return 0.5 * (p - 1.0);
  if (kind == InteractionKind::Gradient) return p - 1.0;
  return 0.0;
}

std::pair<double, double> expected_law(InteractionKind kind, int d, double p, double alpha, double beta) {
  switch (kind) {
    case InteractionKind::Overlap: {
      if (alpha == beta) throw std::invalid_argument("the overlap law needs alpha != beta");
      const double b = std::min(alpha, beta);
      return {-b, -0.5 * b * (d - 1)};
    }
    case InteractionKind::SquareSquare:
      if (d == 1) return {-2.0, 1.0};
      if (d == 2) return {-2.0, -0.5};
      if (d == 3) return {-2.0, -2.0};
      return {-2.0, -(d - 1.0)};
    case InteractionKind::Subquadratic: return {-p, (0.5 - p) * (d - 1)};
    case InteractionKind::Gradient: return {-1.0, -0.5 * (d - 1)};
  }
  return {0.0, 0.0};
}

namespace {

// (a + b)^p - a^p - b^p without cancellation against the largest term.
double pair_excess(double p, double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == 0.0) return 0.0;
  return std::pow(a, p) * std::expm1(p * std::log1p(b / a)) - std::pow(b, p);
}

}  // namespace

SumPowerReport check_sum_power_inequalities(double p, const std::vector<double>& a) {
  if (!(p >= 1.0)) throw std::invalid_argument("p must be at least 1");
  for (double v : a)
    if (!(v >= 0.0)) throw std::invalid_argument("entries must be nonnegative");
  const std::size_t m = a.size();
  SumPowerReport rep;
  if (m == 0) {
    rep.branch = p <= 2.0 ? "p<=2" : (p <= 3.0 ? "2<p<=3" : "p>3");
    return rep;
  }
  // Expand around the largest entry so the left side keeps relative accuracy when the
  // others are tiny.
  const std::size_t top = static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
  const double M = a[top];
  double total = 0.0, rest = 0.0, others_pow = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    total += a[i];
    if (i != top) {
      rest += a[i];
      others_pow += std::pow(a[i], p);
    }
  }
  const double x = M > 0.0 ? rest / M : 0.0;
  if (p <= 2.0) {
    rep.branch = "p<=2";
    rep.lhs = M > 0.0 ? std::abs(std::pow(M, p) * std::expm1(p * std::log1p(x)) - others_pow) : 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) rep.rhs += pair_excess(p, a[i], a[j]);
  } else {
    double cross_others = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (i != top) cross_others += std::pow(a[i], p - 1.0) * (total - a[i]);
    rep.lhs = M > 0.0 ? std::abs(std::pow(M, p) * pow1p_minus_linear(p, x) - others_pow - p * cross_others) : 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) rep.rhs += std::pow(a[i], 0.5 * p) * std::pow(a[j], 0.5 * p);
    if (p <= 3.0) {
      rep.branch = "2<p<=3";
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
          for (std::size_t k = 0; k < m; ++k)
            if (i != j && j != k && i != k)
              rep.rhs += std::pow(a[i], 0.5 * (p - 1.0)) * std::pow(a[j], 0.5 * (p - 1.0)) * a[k];
    } else {
      rep.branch = "p>3";
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
          for (std::size_t k = 0; k < m; ++k)
            if (i != j && i != k) rep.rhs += std::pow(a[i], p - 2.0) * a[j] * a[k];
    }
  }
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
  return rep;
}

}  // namespace solistab
