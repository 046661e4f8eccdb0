#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "solistab/fields.hpp"
#include "solistab/groundstate.hpp"

namespace solistab {

struct SpectrumOptions {
  /// Cell width of the coarse radial grid; a second solve at h/2 feeds Richardson extrapolation.
  double h = 0.01;
  /// Dirichlet cap; 0 selects min(gs.r_max(), 40).
  double r_max = 0.0;
  bool extrapolate = true;
  /// Largest admissible share of eigenvector L^2 mass in the outer tenth of [0, r_max].
  double boundary_tol = 1e-8;
};

/// Lowest eigenpairs of (-Delta + 1) phi = lambda Q^{p-1} phi in the angular sector ell.
/// For d = 1 the sectors are ell = 0 (even) and ell = 1 (odd).
struct SpectrumReport {
  int d = 0;
  double p = 0.0;
  int ell = 0;
  std::vector<double> eigenvalues;
  /// Values on the fine grid before extrapolation.
  std::vector<double> eigenvalues_fine;
  /// Cell centers of the fine grid and eigenvectors normalized by int Q^{p-1} phi^2 r^{d-1} dr = 1.
  std::vector<double> r;
  std::vector<std::vector<double>> eigenvectors;
  /// Share of each eigenvector's mass in the outer tenth of the domain.
  std::vector<double> boundary_mass;
  double r_max = 0.0;
  double h = 0.0;

  nlohmann::json to_json() const;
};

SpectrumReport sector_spectrum(const GroundState& gs, int ell, int n_eigs, const SpectrumOptions& opts = {});

/// The gap kappa = lambda_{d+2} - p assembled from sectors 0, 1, 2 (0, 1 in d = 1).
struct KappaReport {
  double kappa = 0.0;
  /// The sector holding lambda_{d+2}.
  int sector = 0;
  std::vector<SpectrumReport> sectors;
  nlohmann::json to_json() const;
};

KappaReport estimate_kappa(const GroundState& gs, const SpectrumOptions& opts = {});

/// Both sides of the coercivity inequality for trial fields centered on a single Q at the origin.
struct CoercivityEntry {
  double lhs = 0.0;  // ||u||^2_{H^1}
  double rhs = 0.0;
  /// (lhs - rhs) / ||u||^2_{H^1}.
  double relative_margin = 0.0;
};

struct CoercivityReport {
  double kappa = 0.0;
  std::vector<CoercivityEntry> entries;
  double min_relative_margin = 0.0;
  nlohmann::json to_json() const;
};

CoercivityReport coercivity_check(const GroundState& gs, double kappa, const TorusGrid& grid,
                                  const std::vector<TorusField>& trials);

/// Writes r and the eigenvector columns phi_0, phi_1, ... as CSV.
void write_eigenvector_csv(const SpectrumReport& rep, const std::string& path);

}  // namespace solistab
