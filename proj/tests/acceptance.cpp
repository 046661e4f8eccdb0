// Acceptance suite: one PASS/FAIL line per primary criterion, with pinned tolerances.
// Exit status is nonzero when any check fails other than the documented known deviations.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "solistab/construction.hpp"
#include "solistab/decomposition.hpp"
#include "solistab/errors.hpp"
#include "solistab/geometry.hpp"
#include "solistab/interactions.hpp"
#include "solistab/special_functions.hpp"
#include "solistab/spectral.hpp"
#include "solistab/verifier.hpp"

using namespace solistab;

namespace {

// Tolerances and budgets, pinned.
constexpr double kGsClosedForm = 1e-8;
constexpr double kGsResidual = 1e-8;
constexpr double kGsIdentity = 1e-6;
constexpr double kGsSeconds = 10.0;
constexpr double kCqRel = 1e-3;
constexpr double kPsiRel = 1e-12;
constexpr double kPsiSeconds = 1.0;
constexpr double kEig0 = 1e-4;
constexpr double kEig1 = 1e-3;
constexpr double kEigCos = 0.9999;
constexpr double kKappaStable = 1e-3;
constexpr double kEigSeconds = 30.0;
constexpr double kRateRel = 0.01;
constexpr double kPowerRel = 0.05;
constexpr double kPowerRelLog = 0.10;
constexpr double kPowerAbsZero = 0.05;
constexpr double kDirect1d = 1e-8;
constexpr double kLawSeconds = 120.0;
constexpr double kCbarRel = 0.05;
constexpr double kIdentity = 1e-10;
constexpr double kPythagoras = 1e-10;
constexpr double kConstantHm1 = 1e-12;
constexpr double kSharpSeconds = 300.0;
constexpr double kRecoverSingle = 1e-6;
constexpr double kRecoverPair = 1e-5;
constexpr double kOrthogonality = 1e-9;
constexpr double kGeometrySeconds = 10.0;
constexpr double kGauge = 1e-10;
constexpr double kSingleSpread = 0.05;

struct Outcome {
  bool pass = true;
  bool only_known = true;
  std::vector<std::string> lines;

  // A known check fails for a documented reason (README, "Known deviations"); it still fails
  // the criterion but does not fail the run.
  void check(bool ok, const std::string& what, bool known = false) {
    pass = pass && ok;
    if (!ok && !known) only_known = false;
    lines.push_back(std::string(ok ? "ok    " : known ? "FAIL* " : "FAIL  ") + what);
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// Explicit one-dimensional ground state, written out independently of the library.
double q1d(double p, double x) {
  const double a = std::pow(0.5 * (p + 1.0), 1.0 / (p - 1.0));
  return a * std::pow(1.0 / std::cosh(0.5 * (p - 1.0) * x), 2.0 / (p - 1.0));
}

template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * f(a + i * h);
  return s * h / 3;
}

// Line integral split at the centers 0 and -R.
template <class F>
double line_integral(F f, double R) {
  const double pad = 80.0;
  auto n_for = [](double len) { return 2 * static_cast<int>(std::ceil(100.0 * len)); };
  return simpson(f, -R - pad, -R, n_for(pad)) + simpson(f, -R, 0.0, n_for(R)) + simpson(f, 0.0, pad, n_for(pad));
}

Outcome ground_states() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  for (double p : {2.0, 3.0}) {
    const auto gs = solve_ground_state({1, p}, 1e-10);
    double err = 0.0;
    for (int i = 0; i <= 30000; ++i) err = std::max(err, std::abs(gs.Q(i * 1e-3) - q1d(p, i * 1e-3)));
    o.check(err < kGsClosedForm, "d=1 p=" + fmt(p) + " closed-form error " + fmt(err) + " < " + fmt(kGsClosedForm));
  }
  for (auto [d, p] : {std::pair{1, 3.0}, {2, 2.0}, {3, 2.0}, {3, 3.0}}) {
    const auto gs = solve_ground_state({d, p}, 1e-10);
    const std::string tag = "(d,p)=(" + std::to_string(d) + "," + fmt(p) + ")";
    o.check(gs.residual_max() < kGsResidual, tag + " ODE residual " + fmt(gs.residual_max()));
    // Testing the equation against Q: int |Q'|^2 + Q^2 = int Q^{p+1}.
    double lhs = 0.0, rhs = 0.0;
    const double h = 1e-3;
    const int n = 60000;
    for (int i = 0; i <= n; ++i) {
      const double r = i * h;
      const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
      auto [q, dq] = gs.eval(r);
      const double jac = std::pow(r, d - 1);
      lhs += w * jac * (dq * dq + q * q);
      rhs += w * jac * std::pow(q, p + 1);
    }
    const double rel = std::abs(lhs - rhs) / rhs;
    o.check(rel < kGsIdentity, tag + " Pohozaev-type identity " + fmt(rel));
  }
  const double t = seconds_since(t0);
  o.check(t < kGsSeconds, "runtime " + fmt(t) + " s < " + fmt(kGsSeconds) + " s");
  return o;
}

Outcome tail_constants() {
  Outcome o;
  for (double p : {3.0, 2.0}) {
    // sech^{2/(p-1)}(c x) ~ 2^{2/(p-1)} e^{-x}.
    const double expect = std::pow(0.5 * (p + 1.0), 1.0 / (p - 1.0)) * std::pow(2.0, 2.0 / (p - 1.0));
    const auto gs = solve_ground_state({1, p}, 1e-10);
    const double rel = std::abs(gs.c_Q() / expect - 1.0);
    o.check(rel < kCqRel, "d=1 p=" + fmt(p) + " c_Q " + fmt(gs.c_Q()) + " vs " + fmt(expect) + ", rel " + fmt(rel));
  }
  return o;
}

Outcome psi_inversion() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  for (int d = 1; d <= 5; ++d) {
    double worst = 0.0;
    const double top = phi(d, 1.0);
    for (int i = 0; i < 200; ++i) {
      const double s = top * std::pow(10.0, -10.0 * i / 199.0);
      worst = std::max(worst, std::abs(phi(d, psi(d, s)) - s) / s);
    }
    o.check(worst < kPsiRel, "d=" + std::to_string(d) + " worst |phi(psi(s)) - s|/s " + fmt(worst) + " over 10 decades");
  }
  const double t = seconds_since(t0);
  o.check(t < kPsiSeconds, "runtime " + fmt(t) + " s");
  return o;
}

double weighted_cosine(const SpectrumReport& s, int d, const std::vector<double>& u, const std::vector<double>& v) {
  double uv = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < s.r.size(); ++i) {
    const double w = std::pow(s.r[i], d - 1);
    uv += w * u[i] * v[i];
    uu += w * u[i] * u[i];
    vv += w * v[i] * v[i];
  }
  return std::abs(uv) / std::sqrt(uu * vv);
}

Outcome eigenstructure() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  for (auto [d, p] : {std::pair{1, 3.0}, {3, 2.0}}) {
    const auto gs = solve_ground_state({d, p}, 1e-10);
    const std::string tag = "(d,p)=(" + std::to_string(d) + "," + fmt(p) + ")";
    const auto s0 = sector_spectrum(gs, 0, 1);
    const auto s1 = sector_spectrum(gs, 1, 1);
    std::vector<double> q, dq;
    for (double r : s0.r) {
      q.push_back(gs.Q(r));
      dq.push_back(gs.dQ(r));
    }
    const double c0 = weighted_cosine(s0, d, s0.eigenvectors[0], q);
    const double c1 = weighted_cosine(s1, d, s1.eigenvectors[0], dq);
    o.check(std::abs(s0.eigenvalues[0] - 1.0) <= kEig0 && c0 > kEigCos,
            tag + " l=0: lambda " + fmt(s0.eigenvalues[0]) + ", cos(v, Q) " + std::to_string(c0));
    o.check(std::abs(s1.eigenvalues[0] - p) <= kEig1 && c1 > kEigCos,
            tag + " l=1: lambda " + fmt(s1.eigenvalues[0]) + ", cos(v, Q') " + std::to_string(c1));
    SpectrumOptions fine;
    fine.h = 0.5 * SpectrumOptions{}.h;
    const double k = estimate_kappa(gs).kappa;
    const double kf = estimate_kappa(gs, fine).kappa;
    const double rel = std::abs(k - kf) / kf;
    o.check(k > 0.0 && rel < kKappaStable, tag + " kappa " + fmt(k) + ", refinement change " + fmt(rel));
  }
  const double t = seconds_since(t0);
  o.check(t < kEigSeconds, "runtime " + fmt(t) + " s");
  return o;
}

Outcome interaction_laws() {
  Outcome o;
  struct Case {
    InteractionKind kind;
    int d;
    double p;
  };
  const std::vector<Case> cases{
      {InteractionKind::Overlap, 1, 3.0},      {InteractionKind::Overlap, 2, 3.0},
      {InteractionKind::Overlap, 3, 3.0},      {InteractionKind::SquareSquare, 1, 2.0},
      {InteractionKind::SquareSquare, 2, 2.0}, {InteractionKind::SquareSquare, 3, 2.0},
      {InteractionKind::Subquadratic, 1, 1.5}, {InteractionKind::Subquadratic, 2, 1.5},
      {InteractionKind::Gradient, 1, 3.0},     {InteractionKind::Gradient, 2, 2.0},
      {InteractionKind::Gradient, 3, 2.0}};
  std::vector<double> Rs;
  for (double R = 10.0; R <= 24.0 + 1e-9; R += 1.0) Rs.push_back(R);
  for (const auto& c : cases) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto gs = solve_ground_state({c.d, c.p}, 1e-10);
    std::vector<double> y;
    for (double R : Rs) y.push_back(interaction_log_value(gs, c.kind, R));
    const auto fit = fit_asymptotic(Rs, y, default_fit_model(c.kind, c.d), default_kappa(c.kind, c.p));
    const auto [rate, power] = expected_law(c.kind, c.d, c.p);
    const bool log_case = c.kind == InteractionKind::SquareSquare && c.d == 3;
    const double rate_rel = std::abs(fit.rate / rate - 1.0);
    const bool power_ok = power == 0.0 ? std::abs(fit.power) < kPowerAbsZero
                                       : std::abs(fit.power / power - 1.0) < (log_case ? kPowerRelLog : kPowerRel);
    const double t = seconds_since(t0);
    o.check(rate_rel < kRateRel && power_ok && t < kLawSeconds,
            std::string(to_string(c.kind)) + " d=" + std::to_string(c.d) + " p=" + fmt(c.p) + ": rate " +
                fmt(fit.rate) + " (law " + fmt(rate) + "), power " + fmt(fit.power) + " (law " + fmt(power) + "), " +
                fmt(t) + " s");
  }
  // One-dimensional cross-check against direct quadrature of the explicit profile.
  double worst = 0.0;
  for (double p : {2.0, 3.0}) {
    const auto gs = solve_ground_state({1, p}, 1e-10);
    for (double R : {10.0, 16.0, 24.0}) {
      const double ov = line_integral([&](double x) { return std::pow(q1d(p, x), 2) * q1d(p, x + R); }, R);
      const double sq = line_integral([&](double x) { return std::pow(q1d(p, x) * q1d(p, x + R), 2); }, R);
      const double gr = line_integral(
          [&](double x) {
            const double c = 0.5 * (p - 1.0);
            const double dq = -(2.0 / (p - 1.0)) * c * std::tanh(c * x) * q1d(p, x);
            return std::pow(q1d(p, x), p - 1.0) * dq * q1d(p, x + R);
          },
          R);
      worst = std::max(worst, std::abs(std::exp(overlap_integral(gs, 2.0, 1.0, R)) / ov - 1.0));
      worst = std::max(worst, std::abs(std::exp(square_square_integral(gs, R)) / sq - 1.0));
      worst = std::max(worst, std::abs(gradient_overlap(gs, R).value() / gr - 1.0));
    }
  }
  o.check(worst < kDirect1d, "1D direct quadrature, worst relative difference " + fmt(worst));
  return o;
}

Outcome cbar_consistency() {
  Outcome o;
  for (auto [d, p] : {std::pair{1, 3.0}, {2, 2.0}, {3, 2.0}}) {
    const auto gs = solve_ground_state({d, p}, 1e-10);
    // int_{R^d} e^{-x_1} Q^p = int_0^inf r^{d-1} Q(r)^p A_d(r) dr with the spherical mean of e^{-x_1}.
    auto A = [d = d](double r) {
      if (d == 1) return 2.0 * std::cosh(r);
      if (d == 2) return 2.0 * M_PI * std::cyl_bessel_i(0.0, r);
      return r == 0.0 ? 4.0 * M_PI : 4.0 * M_PI * std::sinh(r) / r;
    };
    const double integral = simpson(
        [&](double r) { return std::pow(r, d - 1) * std::pow(gs.Q(r), p) * A(r); }, 0.0, 80.0, 160000);
    const double expect = gs.c_Q() / p * integral;
    const auto g = gradient_overlap(gs, 24.0);
    const double ratio = g.value() / (std::pow(24.0, -0.5 * (d - 1)) * std::exp(-24.0));
    const double rel = std::abs(ratio / expect - 1.0);
    o.check(rel < kCbarRel, "(d,p)=(" + std::to_string(d) + "," + fmt(p) + ") ratio " + fmt(ratio) + " vs " +
                                fmt(expect) + ", rel " + fmt(rel));
  }
  return o;
}

Outcome exact_identities() {
  Outcome o;
  double worst_id = 0.0;
  for (double p : {1.5, 2.0, 3.0}) {
    const auto gs = solve_ground_state({1, p}, 1e-10);
    for (double R : {10.0, 14.0, 18.0}) {
      const TorusGrid g{1, 2 * R + 80, 16384};
      const auto cfg = pair_config({1, p}, R);
      const auto sigma = sample_soliton_sum(gs, cfg, g);
      worst_id = std::max(worst_id, norm(residual_h(sigma, p) + interaction_term_f(gs, cfg, g), Norm::Hm1));
    }
  }
  o.check(worst_id < kIdentity, "||h(sigma) + f||_{H^-1} worst " + fmt(worst_id));

  double worst_py = 0.0;
  for (int d : {1, 2}) {
    const auto gs = solve_ground_state({d, 2.0}, 1e-10);
    const TorusGrid g{d, d == 1 ? 64.0 : 48.0, d == 1 ? 1024 : 128};
    const ModulationBasis B(gs, pair_config({d, 2.0}, 10.0), g);
    for (double x0 : {-4.0, 0.7, 3.0}) {
      const auto v = sample_function(g, ScalarKind::Real, [&](const double* x) {
        double r2 = (x[0] - x0) * (x[0] - x0);
        for (int a = 1; a < d; ++a) r2 += (x[a] - 0.5) * (x[a] - 0.5);
        return cplx(std::exp(-r2 / 2.0) * (1.0 + 0.3 * x[0]));
      });
      const double nv = norm(v, Norm::H1), nf = norm(B.project_F(v), Norm::H1), np = norm(B.project_F_perp(v), Norm::H1);
      worst_py = std::max(worst_py, std::abs(nv * nv - nf * nf - np * np) / (nv * nv));
    }
  }
  o.check(worst_py < kPythagoras, "Pythagoras for P_F, P_F-perp, worst " + fmt(worst_py));

  double worst_c = 0.0;
  for (int d = 1; d <= 3; ++d) {
    const TorusGrid g{d, 7.3, 64};
    const double c = -2.75;
    const auto v = sample_function(g, ScalarKind::Real, [&](const double*) { return cplx(c); });
    const double expect = std::abs(c) * std::sqrt(g.volume());
    worst_c = std::max(worst_c, std::abs(norm(v, Norm::Hm1) - expect) / expect);
  }
  o.check(worst_c < kConstantHm1, "H^-1 norm of a constant vs |c| sqrt(V), worst " + fmt(worst_c));
  return o;
}

Outcome sharp_suite() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> Rs{10.0, 12.0, 14.0, 16.0, 18.0};
  for (double p : {1.5, 2.0, 3.0}) {
    const auto gs = solve_ground_state({1, p}, 1e-10);
    const auto recs = sharp_sweep(gs, 2, Rs);
    const std::string tag = "p=" + fmt(p) + " ";
    auto values = [](const BracketCheck& c) {
      std::string s;
      for (double v : c.values) s += (s.empty() ? "" : " ") + fmt(v);
      return "[" + s + "]";
    };
    const auto proj = verify_projection_ratio(recs, 0.5, 2.0);
    // For p = 1.5 the ratio exceeds 2 at R = 10, 12; see README.
    o.check(proj.pass, tag + "(i) ||rho||/||P(-D+1)^-1 f|| in [1/2, 2]: " + values(proj.checks[0]), p == 1.5);
    const auto lower = verify_lower_bounds(recs, 3.0);
    o.check(lower.checks[0].pass, tag + "(ii) Gamma/(R^{-(d-1)/2}e^-R) factor 3: " + values(lower.checks[0]));
    const auto upper = verify_upper_bound(recs, 5.0, 10.0, 18.0);
    o.check(upper.pass, tag + "(iii) dist/F(Gamma) factor 5: " + values(upper.checks[0]));
    if (p <= 2.0) {
      const auto growth = verify_sharpness_growth(recs);
      o.check(growth.pass, tag + "(iv) dist/Gamma increasing: " + values(growth.checks[0]));
    }
  }
  const double t = seconds_since(t0);
  o.check(t < kSharpSeconds, "runtime " + fmt(t) + " s");
  return o;
}

Outcome decomposition_recovery() {
  Outcome o;
  for (int d : {1, 2}) {
    const auto gs = solve_ground_state({d, 3.0}, 1e-10);
    const TorusGrid g{d, d == 1 ? 80.0 : 64.0, d == 1 ? 1024 : 256};
    SolitonConfig truth{{d, 3.0}, {std::vector<double>(d, 0.0)}, {1.0}};
    truth.centers[0][0] = 1.1;
    auto init = truth;
    init.centers[0][0] += 0.3;
    const auto res = fit_modulation(gs, sample_soliton_sum(gs, truth, g), init);
    double err = 0.0;
    for (int j = 0; j < d; ++j) err = std::max(err, std::abs(res.config.centers[0][j] - truth.centers[0][j]));
    double orth = 0.0;
    for (const auto& r : res.orthogonality_residuals) orth = std::max(orth, std::abs(r.value));
    o.check(err < kRecoverSingle && orth < kOrthogonality,
            "single soliton d=" + std::to_string(d) + " from offset 0.3: error " + fmt(err) + ", residuals " + fmt(orth));
  }
  {
    const auto gs = solve_ground_state({1, 3.0}, 1e-10);
    const TorusGrid g{1, 80.0, 1024};
    auto truth = pair_config({1, 3.0}, 12.0);
    truth.centers[0][0] += 0.15;
    truth.centers[1][0] -= 0.1;
    auto init = pair_config({1, 3.0}, 12.0);
    init.centers[0][0] -= 0.2;
    init.centers[1][0] += 0.25;
    auto u = sample_soliton_sum(gs, truth, g);
    const auto res = fit_modulation(gs, u, init);
    double err = 0.0;
    for (std::size_t k = 0; k < 2; ++k) err = std::max(err, std::abs(res.config.centers[k][0] - truth.centers[k][0]));
    double orth = 0.0;
    for (const auto& r : res.orthogonality_residuals) orth = std::max(orth, std::abs(r.value));
    o.check(err < kRecoverPair && orth < kOrthogonality,
            "two solitons at R=12: error " + fmt(err) + ", residuals " + fmt(orth));

    // At a sharp example the remainder is genuinely nonzero and the residuals must still vanish.
    const auto ex = build_sharp_example(gs, pair_config({1, 3.0}, 12.0), g);
    const auto fit = fit_modulation(gs, ex.u, init);
    double orth2 = 0.0;
    for (const auto& r : fit.orthogonality_residuals) orth2 = std::max(orth2, std::abs(r.value));
    o.check(orth2 < kOrthogonality && fit.norms.rho_H1 > 0.0,
            "sharp example fit: ||rho|| " + fmt(fit.norms.rho_H1) + ", residuals " + fmt(orth2));
  }
  return o;
}

Outcome geometry_sets() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> nd;
  int failures = 0;
  double worst_c = 1.0;
  for (int set = 0; set < 200; ++set) {
    const std::size_t m = 2 + static_cast<std::size_t>(set % 5);
    const std::size_t d = 1 + static_cast<std::size_t>((set / 5) % 4);
    std::vector<Point> pts(m, Point(d));
    for (auto& x : pts)
      for (auto& v : x) v = 10.0 * nd(rng);
    const auto res = project_points(pts, 0.05);
    bool ok = res.c_achieved > 0.0;
    // Brute force: apply the returned rotation to every difference from the base point.
    for (std::size_t k = 0; k < m; ++k) {
      if (k == res.base_index) continue;
      Point diff(d);
      for (std::size_t a = 0; a < d; ++a) diff[a] = pts[k][a] - pts[res.base_index][a];
      const Point y = res.apply(diff);
      double len = 0.0;
      for (double v : y) len += v * v;
      len = std::sqrt(len);
      ok = ok && y[0] > 0.0 && y[0] / len >= res.c_achieved - 1e-15;
    }
    worst_c = std::min(worst_c, res.c_achieved);
    failures += ok ? 0 : 1;
  }
  const double t = seconds_since(t0);
  o.check(failures == 0, "200 sets (m <= 6, d <= 4): " + std::to_string(failures) + " failures, smallest c_achieved " +
                             fmt(worst_c));
  o.check(t < kGeometrySeconds, "runtime " + fmt(t) + " s");
  return o;
}

Outcome complex_case() {
  Outcome o;
  const auto gs = solve_ground_state({1, 3.0}, 1e-10);
  ComplexOptions co;
  co.single_tolerance = kSingleSpread;
  for (double theta : {0.0, 0.7, 2.5}) {
    const auto single = verify_complex_single(gs, theta, {1e-4, 1e-3, 1e-2}, co);
    o.check(single.checks[0].pass, "theta=" + fmt(theta) + " dist/Gamma over eps in [" + fmt(single.checks[0].lo) +
                                       ", " + fmt(single.checks[0].hi) + "], spread < 5%");
    o.check(single.checks[1].hi <= kGauge, "theta=" + fmt(theta) + " global phase change " + fmt(single.checks[1].hi));
  }
  const auto equal = chain_config({1, 3.0}, 2, 12.0, {1.0, 1.0});
  const auto multi = verify_complex_multi(gs, equal, {1e-3, 3e-3, 1e-2}, co);
  o.check(multi.pass && !multi.checks[0].skipped, "m=2 equal phases R=12: dist/Gamma in [" + fmt(multi.checks[0].lo) +
                                                      ", " + fmt(multi.checks[0].hi) + "]");
  ComplexOptions strict = co;
  strict.strict = true;
  bool rejected = false;
  try {
    verify_complex_multi(gs, chain_config({1, 3.0}, 2, 12.0, {1.0, cplx(0.0, 1.0)}), {1e-3}, strict);
  } catch (const NumericalError& e) {
    rejected = e.kind() == ErrorKind::PhaseRestrictionViolated;
  }
  o.check(rejected, "phases {0, pi/2} rejected in strict mode");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"ground-state correctness", ground_states},
      {"c_Q extraction", tail_constants},
      {"psi inversion", psi_inversion},
      {"eigenstructure", eigenstructure},
      {"interaction laws", interaction_laws},
      {"cbar consistency", cbar_consistency},
      {"exact identities", exact_identities},
      {"sharp-example suite", sharp_suite},
      {"decomposition recovery", decomposition_recovery},
      {"geometry", geometry_sets},
      {"complex case", complex_case},
  };
  int unexpected = 0, known = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = run();
    } catch (const std::exception& e) {
      out.check(false, std::string("threw: ") + e.what());
    }
    const bool is_known = !out.pass && out.only_known;
    std::string tag = out.pass ? "PASS" : "FAIL";
    if (!out.pass && is_known) tag += " (known deviation)";
    std::printf("%s  %s  [%.1f s]\n", tag.c_str(), name.c_str(), seconds_since(t0));
    for (const auto& l : out.lines) std::printf("      %s\n", l.c_str());
    std::fflush(stdout);
    if (!out.pass) (is_known ? known : unexpected) += 1;
  }
  std::printf("%zu criteria: %d unexpected failures, %d known deviations\n", criteria.size(), unexpected, known);
  return unexpected == 0 ? 0 : 1;
}
