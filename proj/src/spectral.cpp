#include "solistab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "solistab/errors.hpp"
#include "solistab/io.hpp"

namespace solistab {

namespace {

// Symmetric tridiagonal pencil A - lambda B with diagonal B > 0, from the finite-volume form of
// -(r^{d-1} phi')' + r^{d-1} (1 + ell(ell+d-2)/r^2) phi on cells centered at (i + 1/2) h.
struct Pencil {
  std::vector<double> r, a, e, b;
  double h = 0.0;

  std::size_t size() const { return a.size(); }

  // Number of eigenvalues below sigma, from the inertia of the LDL^T pivots.
  std::size_t count_below(double sigma) const {
    std::size_t neg = 0;
    double piv = 1.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      piv = a[i] - sigma * b[i] - (i ? e[i - 1] * e[i - 1] / piv : 0.0);
      if (piv == 0.0) piv = -1e-300;
      if (piv < 0.0) ++neg;
    }
    return neg;
  }
};

Pencil build_pencil(const GroundState& gs, int ell, double h, double r_max) {
  const int d = gs.d();
  const double p = gs.p();
  const auto n = static_cast<std::size_t>(std::llround(r_max / h));
  auto w = [&](double r) { return d == 1 ? 1.0 : std::pow(r, d - 1); };
  const double cent = d == 1 ? 0.0 : ell * (ell + d - 2.0);
  Pencil P;
  P.h = h;
  P.r.resize(n);
  P.a.resize(n);
  P.b.resize(n);
  P.e.resize(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i + 0.5) * h;
    const double fl = i == 0 ? 0.0 : w(i * h);
    const double fr = w((i + 1) * h);
    P.r[i] = r;
    P.a[i] = (fl + fr) / h + h * w(r) * (1.0 + cent / (r * r));
    P.b[i] = h * w(r) * std::pow(gs.Q(r), p - 1.0);
    if (i + 1 < n) P.e[i] = -fr / h;
  }
  // Odd sector in d = 1: phi(0) = 0 through an antisymmetric ghost cell.
  if (d == 1 && ell == 1) P.a[0] += 2.0 / h;
  // Dirichlet cap at r_max through an antisymmetric ghost cell.
  P.a[n - 1] += w(n * h) / h;
  return P;
}

double bisect_eigenvalue(const Pencil& P, std::size_t index, double hi) {
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (P.count_below(mid) > index)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> inverse_iteration(const Pencil& P, double lambda, const std::vector<std::vector<double>>& prior) {
  const auto n = static_cast<Eigen::Index>(P.size());
  Eigen::SparseMatrix<double> M(n, n);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * P.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    trip.emplace_back(i, i, P.a[i] - lambda * P.b[i]);
    if (i + 1 < n) {
      trip.emplace_back(i, i + 1, P.e[i]);
      trip.emplace_back(i + 1, i, P.e[i]);
    }
  }
  M.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success) throw NumericalError(ErrorKind::IllConditioned, "shifted pencil factorization");
  auto b_dot = [&](const Eigen::VectorXd& x, const std::vector<double>& y) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += P.b[i] * x(i) * y[i];
    return s;
  };
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = 1.0 + 0.1 * std::sin(0.37 * i);
  for (int it = 0; it < 4; ++it) {
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) rhs(i) = P.b[i] * x(i);
    x = lu.solve(rhs);
    for (const auto& q : prior) {
      const double c = b_dot(x, q);
      for (Eigen::Index i = 0; i < n; ++i) x(i) -= c * q[i];
    }
    double nb = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) nb += P.b[i] * x(i) * x(i);
    x /= std::sqrt(nb);
  }
  Eigen::Index imax = 0;
  x.cwiseAbs().maxCoeff(&imax);
  if (x(imax) < 0.0) x = -x;
  return std::vector<double>(x.data(), x.data() + n);
}

struct SectorSolve {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
  Pencil pencil;
};

SectorSolve solve_sector(const GroundState& gs, int ell, int n_eigs, double h, double r_max, bool want_vectors) {
  SectorSolve out;
  out.pencil = build_pencil(gs, ell, h, r_max);
  const auto k = static_cast<std::size_t>(n_eigs);
  double hi = 1.0;
  while (out.pencil.count_below(hi) < k) {
    hi *= 2.0;
    if (hi > 1e12) throw NumericalError(ErrorKind::Discretization, "too few eigenvalues on the grid");
  }
  for (std::size_t j = 0; j < k; ++j) out.values.push_back(bisect_eigenvalue(out.pencil, j, hi));
  if (want_vectors)
    for (std::size_t j = 0; j < k; ++j) out.vectors.push_back(inverse_iteration(out.pencil, out.values[j], out.vectors));
  return out;
}

}  // namespace

SpectrumReport sector_spectrum(const GroundState& gs, int ell, int n_eigs, const SpectrumOptions& opts) {
  const int d = gs.d();
  if (ell < 0 || ell > 4) throw std::invalid_argument("sector must be in [0, 4]");
  if (d == 1 && ell > 1) throw std::invalid_argument("d = 1 has only the even (0) and odd (1) sectors");
  if (n_eigs < 1) throw std::invalid_argument("n_eigs must be positive");
  if (!(opts.h > 0.0)) throw std::invalid_argument("h must be positive");
  const double r_max = opts.r_max > 0.0 ? opts.r_max : std::min(gs.r_max(), 40.0);
  if (!(r_max > 20.0 * opts.h)) throw std::invalid_argument("r_max too small for the grid");

  SpectrumReport rep;
  rep.d = d;
  rep.p = gs.p();
  rep.ell = ell;
  rep.r_max = r_max;
  const double h_fine = opts.extrapolate ? 0.5 * opts.h : opts.h;
  rep.h = h_fine;
  auto fine = solve_sector(gs, ell, n_eigs, h_fine, r_max, true);
  rep.eigenvalues_fine = fine.values;
  rep.eigenvalues = fine.values;
  if (opts.extrapolate) {
    auto coarse = solve_sector(gs, ell, n_eigs, opts.h, r_max, false);
    for (std::size_t j = 0; j < rep.eigenvalues.size(); ++j)
      rep.eigenvalues[j] = (4.0 * fine.values[j] - coarse.values[j]) / 3.0;
  }
  rep.r = fine.pencil.r;
  rep.eigenvectors = fine.vectors;
  const double w_pow = d - 1.0;
  for (const auto& v : rep.eigenvectors) {
    double total = 0.0, outer = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double m = std::pow(rep.r[i], w_pow) * v[i] * v[i];
      total += m;
      if (rep.r[i] > 0.9 * r_max) outer += m;
    }
    rep.boundary_mass.push_back(outer / total);
    if (outer > opts.boundary_tol * total)
      throw NumericalError(ErrorKind::Discretization, "eigenvector mass reaches the Dirichlet cap; raise r_max");
  }
  return rep;
}

nlohmann::json SpectrumReport::to_json() const {
  return {{"d", d},
          {"p", p},
          {"sector", ell},
          {"eigenvalues", eigenvalues},
          {"eigenvalues_fine", eigenvalues_fine},
          {"boundary_mass", boundary_mass},
          {"r_max", r_max},
          {"h", h}};
}

KappaReport estimate_kappa(const GroundState& gs, const SpectrumOptions& opts) {
  KappaReport rep;
  rep.sectors.push_back(sector_spectrum(gs, 0, 2, opts));
  rep.sectors.push_back(sector_spectrum(gs, 1, 2, opts));
  if (gs.d() > 1) rep.sectors.push_back(sector_spectrum(gs, 2, 1, opts));
  // Sector 0 starts with lambda = 1 and sector 1 with lambda = p; the next value above p is
  // the smallest remaining one across sectors.
  double next = rep.sectors[0].eigenvalues[1];
  rep.sector = 0;
  if (rep.sectors[1].eigenvalues[1] < next) {
    next = rep.sectors[1].eigenvalues[1];
    rep.sector = 1;
  }
  if (rep.sectors.size() > 2 && rep.sectors[2].eigenvalues[0] < next) {
    next = rep.sectors[2].eigenvalues[0];
    rep.sector = 2;
  }
  rep.kappa = next - gs.p();
  return rep;
}

nlohmann::json KappaReport::to_json() const {
  nlohmann::json s = nlohmann::json::array();
  for (const auto& r : sectors) s.push_back(r.to_json());
  return {{"kappa", kappa}, {"kappa_sector", sector}, {"sectors", s}};
}

CoercivityReport coercivity_check(const GroundState& gs, double kappa, const TorusGrid& grid,
                                  const std::vector<TorusField>& trials) {
  grid.validate();
  if (grid.d != gs.d()) throw std::invalid_argument("grid and ground state dimensions differ");
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  const double p = gs.p();
  const std::vector<double> origin(static_cast<std::size_t>(grid.d), 0.0);
  const TorusField Q = sample_profile(gs, origin, grid);
  std::vector<TorusField> dQ;
  for (int j = 0; j < grid.d; ++j) dQ.push_back(sample_gradient(gs, origin, j, grid));
  std::vector<double> weight(Q.size());
  for (std::size_t i = 0; i < Q.size(); ++i) weight[i] = std::pow(Q[i].real(), p - 1.0);
  const double cell = std::pow(grid.h(), grid.d);
  const double nQ = inner_h1(Q, Q);
  std::vector<double> ndQ;
  for (const auto& g : dQ) ndQ.push_back(inner_h1(g, g));

  CoercivityReport rep;
  rep.kappa = kappa;
  rep.min_relative_margin = std::numeric_limits<double>::infinity();
  for (const auto& u : trials) {
    if (!u.is_real()) throw std::invalid_argument("coercivity trials must be real");
    if (u.grid().d != grid.d || u.grid().n != grid.n || u.grid().L != grid.L)
      throw std::invalid_argument("trial field lives on a different grid");
    double weighted = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) weighted += weight[i] * std::norm(u[i]);
    weighted *= cell;
    CoercivityEntry e;
    e.lhs = inner_h1(u, u);
    const double uq = inner_h1(u, Q);
    e.rhs = (p + kappa) * weighted - (p + kappa - 1.0) * uq * uq / nQ;
    for (std::size_t j = 0; j < dQ.size(); ++j) {
      const double c = inner_h1(u, dQ[j]);
      e.rhs -= kappa / p * c * c / ndQ[j];
    }
    e.relative_margin = e.lhs > 0.0 ? (e.lhs - e.rhs) / e.lhs : 0.0;
    rep.min_relative_margin = std::min(rep.min_relative_margin, e.relative_margin);
    rep.entries.push_back(e);
  }
  return rep;
}

nlohmann::json CoercivityReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : entries)
    rows.push_back({{"lhs", e.lhs}, {"rhs", e.rhs}, {"relative_margin", e.relative_margin}});
  return {{"kappa", kappa}, {"min_relative_margin", min_relative_margin}, {"entries", rows}};
}

void write_eigenvector_csv(const SpectrumReport& rep, const std::string& path) {
  std::vector<std::string> header{"r"};
  for (std::size_t j = 0; j < rep.eigenvectors.size(); ++j) header.push_back("phi_" + std::to_string(j));
  CsvWriter csv(path, header);
  for (std::size_t i = 0; i < rep.r.size(); ++i) {
    std::vector<double> row{rep.r[i]};
    for (const auto& v : rep.eigenvectors) row.push_back(v[i]);
    csv.row(row);
  }
}

}  // namespace solistab
