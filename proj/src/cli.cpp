#include "solistab/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "solistab/construction.hpp"
#include "solistab/decomposition.hpp"
#include "solistab/errors.hpp"
#include "solistab/geometry.hpp"
#include "solistab/groundstate.hpp"
#include "solistab/interactions.hpp"
#include "solistab/io.hpp"
#include "solistab/special_functions.hpp"
#include "solistab/spectral.hpp"
#include "solistab/verifier.hpp"

namespace solistab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Common {
  std::string cache_dir = ".solistab-cache";
  bool no_cache = false;
  double tol = 1e-10;
  double r_max = 0.0;
  int jobs = 1;
};

// Everything a subcommand reports back to the driver.
struct Outcome {
  int code = kExitOk;
  std::vector<std::string> outputs;
  json details = json::object();
};

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : sep) + s;
  return out;
}

json option_values(const CLI::App& app) {
  json j = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames()[0] == "help") continue;
    j[opt->get_lnames()[0]] = opt->results().empty() ? opt->get_default_str() : join(opt->results(), ",");
  }
  return j;
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string cache_key(int d, double p, double tol, double r_max) {
  std::ostringstream s;
  s << "gs_d" << d << "_p" << format_double(p) << "_tol" << format_double(tol) << "_rmax" << format_double(r_max)
    << ".json";
  return s.str();
}

GroundState load_ground_state(const Common& c, int d, double p, json* info = nullptr) {
  const double r_max = c.r_max > 0.0 ? c.r_max : default_r_max(c.tol);
  GroundStateOptions o;
  o.r_max = r_max;
  const fs::path file = fs::path(c.cache_dir) / cache_key(d, p, c.tol, r_max);
  if (!c.no_cache && fs::exists(file)) {
    GroundState gs = GroundState::from_json(read_json(file.string()));
    if (info) *info = {{"cache", file.string()}, {"cache_hit", true}};
    return gs;
  }
  GroundState gs = solve_ground_state({d, p}, c.tol, o);
  if (!c.no_cache) {
    fs::create_directories(c.cache_dir);
    write_json(file.string(), gs.to_json());
  }
  if (info) *info = {{"cache", c.no_cache ? "" : file.string()}, {"cache_hit", false}};
  return gs;
}

json grid_json(const TorusGrid& g) { return {{"d", g.d}, {"L", g.L}, {"n", g.n}, {"h", g.L / g.n}}; }

SolitonConfig config_from_json(const json& j) {
  SolitonConfig cfg;
  cfg.params = {j.at("d").get<int>(), j.at("p").get<double>()};
  cfg.centers = j.at("centers").get<std::vector<std::vector<double>>>();
  if (j.contains("phases")) {
    for (const auto& z : j.at("phases")) cfg.phases.emplace_back(z.at(0).get<double>(), z.at(1).get<double>());
  } else {
    cfg.phases.assign(cfg.centers.size(), 1.0);
  }
  cfg.complex_kind = j.value("complex", false);
  cfg.validate();
  return cfg;
}

std::vector<cplx> phases_from_angles(const std::vector<double>& angles) {
  std::vector<cplx> z;
  for (double a : angles) z.push_back(std::polar(1.0, a));
  return z;
}

int status_code(bool pass) { return pass ? kExitOk : kExitFail; }

}  // namespace

std::vector<double> parse_range(const std::string& text) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v)) throw std::invalid_argument("bad number '" + s + "' in " + text);
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw std::invalid_argument("range must read a:b:step, got " + text);
    const double a = number(parts[0]), b = number(parts[1]), step = number(parts[2]);
    if (!(step > 0.0) || b < a) throw std::invalid_argument("range needs a <= b and step > 0: " + text);
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9));
    if (count > 1000000) throw std::invalid_argument("range too long: " + text);
    for (long k = 0; k <= count; ++k) out.push_back(a + static_cast<double>(k) * step);
    return out;
  }
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) out.push_back(number(part));
  if (out.empty()) throw std::invalid_argument("empty value list");
  return out;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Numerical laboratory for the stability of soliton sums of -Delta u + u = |u|^{p-1} u", "solistab"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", kVersion);

  Common common;
  auto add_common = [&](CLI::App* s, bool with_jobs = false) {
    s->add_option("--cache-dir", common.cache_dir, "Ground-state cache directory");
    s->add_flag("--no-cache", common.no_cache, "Always recompute the ground state");
    s->add_option("--tol", common.tol, "Ground-state tolerance")->check(CLI::Range(1e-14, 1e-4));
    s->add_option("--r-max", common.r_max, "Radial truncation (0: default for tol)")->check(CLI::NonNegativeNumber);
    if (with_jobs) s->add_option("--jobs", common.jobs, "Concurrent sweep points")->check(CLI::PositiveNumber);
  };

  int d = 1;
  double p = 3.0;
  auto add_dp = [&](CLI::App* s) {
    s->add_option("--d", d, "Dimension")->check(CLI::Range(1, 5));
    s->add_option("--p", p, "Exponent");
  };

  // ground-state
  std::string gs_out;
  auto* c_gs = app.add_subcommand("ground-state", "Solve for the radial ground state and write it as JSON");
  add_dp(c_gs);
  add_common(c_gs);
  c_gs->add_option("--out", gs_out, "Output JSON")->required();

  // special-fn
  std::string sf_fn = "F", sf_s = "-12:-1:0.25", sf_out;
  bool sf_log10 = true;
  auto* c_sf = app.add_subcommand("special-fn", "Tabulate phi, psi, the stability modulus F or all five F branches");
  add_dp(c_sf);
  c_sf->add_option("--fn", sf_fn, "phi | psi | F | branches")
      ->check(CLI::IsMember({"phi", "psi", "F", "branches"}));
  c_sf->add_option("--s", sf_s, "Arguments as a:b:step or a list");
  c_sf->add_option("--log10", sf_log10, "Treat --s values as base-10 exponents");
  c_sf->add_option("--out", sf_out, "Output CSV")->required();

  // interaction-scan
  std::string is_kind = "square-square", is_R = "10:24:1", is_out, is_model;
  double is_alpha = 2.0, is_beta = 1.0;
  auto* c_is = app.add_subcommand("interaction-scan", "Interaction integrals over an R-sweep with an asymptotic fit");
  add_dp(c_is);
  add_common(c_is);
  c_is->add_option("--kind", is_kind, "overlap | square-square | subquadratic | gradient")
      ->check(CLI::IsMember({"overlap", "square-square", "subquadratic", "gradient"}));
  c_is->add_option("--R", is_R, "Separations as a:b:step or a list");
  c_is->add_option("--alpha", is_alpha, "Overlap exponent on the first soliton");
  c_is->add_option("--beta", is_beta, "Overlap exponent on the second soliton");
  c_is->add_option("--model", is_model, "Fit model (default: matched to the kind)");
  c_is->add_option("--out", is_out, "Output CSV")->required();

  // sharp-example
  std::size_t se_m = 2;
  double se_R = 12.0, se_h = 0.0, se_picard_tol = 1e-10;
  int se_n = 0;
  bool se_dealias = false;
  std::string se_dir;
  auto* c_se = app.add_subcommand("sharp-example", "Build a sharp example u = sigma + rho by contraction");
  add_dp(c_se);
  add_common(c_se);
  c_se->add_option("--m", se_m, "Number of solitons")->check(CLI::PositiveNumber);
  c_se->add_option("--R", se_R, "Separation");
  c_se->add_option("--n", se_n, "Points per axis (0: from --spacing)");
  c_se->add_option("--spacing", se_h, "Target grid spacing (0: default for d)");
  c_se->add_option("--picard-tol", se_picard_tol, "Relative Picard tolerance");
  c_se->add_flag("--dealiased", se_dealias, "Dealias the nonlinear remainder");
  c_se->add_option("--out-dir", se_dir, "Output directory")->required();

  // decompose
  std::string dc_field, dc_config, dc_out, dc_rho, dc_amp = "phase";
  std::size_t dc_m = 1;
  double dc_R = 0.0, dc_tol = 1e-10;
  int dc_iter = 60;
  auto* c_dc = app.add_subcommand("decompose", "Fit the modulation decomposition of a field snapshot");
  add_dp(c_dc);
  add_common(c_dc);
  c_dc->add_option("--field", dc_field, "Field snapshot")->required()->check(CLI::ExistingFile);
  c_dc->add_option("--config", dc_config, "Initial configuration JSON (d, p, centers, phases)")->check(CLI::ExistingFile);
  c_dc->add_option("--m", dc_m, "Chain initializer: number of solitons")->check(CLI::PositiveNumber);
  c_dc->add_option("--R", dc_R, "Chain initializer: spacing");
  c_dc->add_option("--amplitudes", dc_amp, "fixed | phase | free (complex fields)")
      ->check(CLI::IsMember({"fixed", "phase", "free"}));
  c_dc->add_option("--fit-tol", dc_tol, "Stationarity tolerance")->check(CLI::PositiveNumber);
  c_dc->add_option("--max-iterations", dc_iter, "Gauss-Newton iteration cap")->check(CLI::PositiveNumber);
  c_dc->add_option("--rho", dc_rho, "Also write the remainder snapshot here");
  c_dc->add_option("--out", dc_out, "Output JSON")->required();

  // verify
  std::string vf_case = "sharp", vf_R = "10:18:2", vf_eps = "1e-3,3e-3,1e-2", vf_phases, vf_dir, vf_pert = "scale";
  std::size_t vf_m = 2;
  double vf_theta = 0.0, vf_c = 0.5, vf_bracket = 5.0, vf_lower_bracket = 3.0, vf_h = 0.0;
  int vf_n = 0;
  bool vf_strict = false;
  auto* c_vf = app.add_subcommand("verify", "Run a verification sweep and report PASS or FAIL");
  add_dp(c_vf);
  add_common(c_vf, true);
  c_vf->add_option("--case", vf_case, "sharp | perturbed | complex-single | complex-multi | log-correction")
      ->check(CLI::IsMember({"sharp", "perturbed", "complex-single", "complex-multi", "log-correction"}));
  c_vf->add_option("--m", vf_m, "Number of solitons")->check(CLI::PositiveNumber);
  c_vf->add_option("--R", vf_R, "Separations as a:b:step or a list");
  c_vf->add_option("--eps", vf_eps, "Perturbation sizes as a:b:step or a list");
  c_vf->add_option("--perturbation", vf_pert, "scale (w = sigma) | bump (Gaussian near the first center)")
      ->check(CLI::IsMember({"scale", "bump"}));
  c_vf->add_option("--theta", vf_theta, "Global phase for complex-single");
  c_vf->add_option("--phases", vf_phases, "Phase angles in radians, one per soliton");
  c_vf->add_option("--c", vf_c, "Phase restriction threshold")->check(CLI::Range(0.0, 1.0));
  c_vf->add_flag("--strict", vf_strict, "Reject configurations violating the phase restriction");
  c_vf->add_option("--bracket", vf_bracket, "Bracket factor for upper-bound and intermediate checks");
  c_vf->add_option("--lower-bracket", vf_lower_bracket, "Bracket factor for the lower bounds");
  c_vf->add_option("--n", vf_n, "Points per axis (0: from --spacing)");
  c_vf->add_option("--spacing", vf_h, "Target grid spacing (0: default for d)");
  c_vf->add_option("--out-dir", vf_dir, "Output directory")->required();

  // project-points
  std::string pp_points, pp_out;
  std::size_t pp_random = 0;
  int pp_dim = 2;
  std::uint64_t pp_seed = 1;
  double pp_delta = 0.5, pp_scale = 10.0;
  auto* c_pp = app.add_subcommand("project-points", "Find a direction putting every point in a cone about it");
  c_pp->add_option("--points", pp_points, "JSON array of points")->check(CLI::ExistingFile);
  c_pp->add_option("--random", pp_random, "Draw this many points instead");
  c_pp->add_option("--dim", pp_dim, "Dimension of random points")->check(CLI::Range(1, 16));
  c_pp->add_option("--seed", pp_seed, "Seed for random points");
  c_pp->add_option("--scale", pp_scale, "Coordinate range of random points")->check(CLI::PositiveNumber);
  c_pp->add_option("--delta", pp_delta, "Target delta")->check(CLI::Range(0.0, 1.0));
  c_pp->add_option("--out", pp_out, "Output JSON")->required();

  // spectrum
  int sp_ell = 0, sp_neigs = 4;
  double sp_h = 0.01;
  bool sp_kappa = false;
  std::string sp_out, sp_vectors;
  auto* c_sp = app.add_subcommand("spectrum", "Weighted eigenproblem (-Delta + 1) phi = lambda Q^{p-1} phi by sector");
  add_dp(c_sp);
  add_common(c_sp);
  c_sp->add_option("--ell", sp_ell, "Angular sector")->check(CLI::NonNegativeNumber);
  c_sp->add_option("--n-eigs", sp_neigs, "Eigenvalues to report")->check(CLI::PositiveNumber);
  c_sp->add_option("--radial-step", sp_h, "Radial step")->check(CLI::PositiveNumber);
  c_sp->add_flag("--kappa", sp_kappa, "Estimate the spectral gap over sectors instead");
  c_sp->add_option("--vectors", sp_vectors, "Eigenvector CSV");
  c_sp->add_option("--out", sp_out, "Output JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const auto start = std::chrono::steady_clock::now();
  std::string manifest_path;
  json manifest = {{"tool", "solistab"}, {"version", kVersion}, {"subcommand", sub->get_name()},
                   {"config", option_values(*sub)}};
  Outcome out;

  auto run = [&]() {
    if (sub == c_gs) {
      manifest_path = gs_out + ".manifest.json";
      json info;
      const GroundState gs = load_ground_state(common, d, p, &info);
      ensure_parent(gs_out);
      write_json(gs_out, gs.to_json());
      out.outputs = {gs_out};
      out.details = {{"q0", gs.q0()}, {"c_Q", gs.c_Q()}, {"r_max", gs.r_max()},
                     {"residual_max", gs.residual_max()}, {"tail_drift", gs.tail_drift()}, {"ground_state", info}};
      std::cout << "q0 " << format_double(gs.q0()) << " c_Q " << format_double(gs.c_Q()) << "\n";
    } else if (sub == c_sf) {
      manifest_path = sf_out + ".manifest.json";
      std::vector<double> s = parse_range(sf_s);
      if (sf_log10)
        for (double& v : s) v = std::pow(10.0, v);
      ensure_parent(sf_out);
      if (sf_fn == "phi") {
        CsvWriter w(sf_out, {"t", "phi"});
        for (double t : s) w.row(std::vector<double>{t, phi(d, t)});
      } else if (sf_fn == "psi") {
        CsvWriter w(sf_out, {"s", "psi", "phi_of_psi"});
        for (double v : s) {
          const double t = psi(d, v);
          w.row(std::vector<double>{v, t, phi(d, t)});
        }
      } else if (sf_fn == "F") {
        StabilityModulus F({d, p});
        out.details["branch"] = std::string(to_string(F.branch()));
        CsvWriter w(sf_out, {"s", "F"});
        for (double v : s) w.row(std::vector<double>{v, F(v)});
      } else {
        // One representative (d, p) per branch; the subquadratic one uses the given d and p < 2.
        const double p_sub = p < 2.0 ? p : 1.5;
        std::vector<std::pair<std::string, StabilityModulus>> branches{
            {"linear", StabilityModulus({1, 3.0})},  {"log_d1", StabilityModulus({1, 2.0})},
            {"psi_d2", StabilityModulus({2, 2.0})},  {"psi_d3", StabilityModulus({3, 2.0})},
            {"subquadratic", StabilityModulus({d, p_sub})}};
        std::vector<std::string> header{"s"};
        json reps = json::object();
        for (const auto& [name, F] : branches) {
          header.push_back(name);
          reps[name] = {{"d", F.params().d}, {"p", F.params().p}};
        }
        out.details["branch_params"] = reps;
        CsvWriter w(sf_out, header);
        for (double v : s) {
          std::vector<double> row{v};
          for (const auto& b : branches) row.push_back(b.second(v));
          w.row(row);
        }
      }
      out.outputs = {sf_out};
    } else if (sub == c_is) {
      manifest_path = is_out + ".manifest.json";
      const auto kind = interaction_kind_from_string(is_kind);
      const auto Rs = parse_range(is_R);
      json info;
      const GroundState gs = load_ground_state(common, d, p, &info);
      std::vector<double> logI;
      for (double R : Rs) logI.push_back(interaction_log_value(gs, kind, R, is_alpha, is_beta));
      const FitModel model = is_model.empty() ? default_fit_model(kind, d) : fit_model_from_string(is_model);
      const AsymptoticFit fit = fit_asymptotic(Rs, logI, model, default_kappa(kind, p));
      const auto law = expected_law(kind, d, p, is_alpha, is_beta);
      ensure_parent(is_out);
      CsvWriter w(is_out, {"R", "log_integral", "predicted", "residual", "fitted_rate", "fitted_power", "law_rate",
                           "law_power", "law_log"});
      for (std::size_t i = 0; i < Rs.size(); ++i) {
        const double pred = fit.predict(Rs[i]);
        w.row(std::vector<double>{Rs[i], logI[i], pred, logI[i] - pred, fit.rate, fit.power, law.first, law.second,
                                  predicted_log(kind, d, p, Rs[i], is_alpha, is_beta)});
      }
      const std::string fit_path = is_out + ".fit.json";
      json fj = fit.to_json();
      fj["kind"] = is_kind;
      fj["law"] = {{"rate", law.first}, {"power", law.second}};
      write_json(fit_path, fj);
      out.outputs = {is_out, fit_path};
      out.details = {{"fit", fj}, {"ground_state", info}};
      std::cout << "rate " << format_double(fit.rate) << " power " << format_double(fit.power) << " (law "
                << format_double(law.first) << ", " << format_double(law.second) << ")\n";
    } else if (sub == c_se) {
      fs::create_directories(se_dir);
      manifest_path = (fs::path(se_dir) / "manifest.json").string();
      json info;
      const GroundState gs = load_ground_state(common, d, p, &info);
      const auto cfg = chain_config({d, p}, se_m, se_R);
      SweepOptions so;
      so.h = se_h;
      so.n = se_n;
      const TorusGrid grid = sweep_grid(gs, cfg, so);
      SharpOptions sh;
      sh.tol = se_picard_tol;
      sh.dealiased = se_dealias;
      const auto ex = build_sharp_example(gs, cfg, grid, sh);
      const std::string rep = (fs::path(se_dir) / "report.json").string();
      const std::string u = (fs::path(se_dir) / "u.bin").string();
      const std::string rho = (fs::path(se_dir) / "rho.bin").string();
      json rj = ex.report.to_json();
      rj["config"] = to_json(cfg);
      rj["grid"] = grid_json(grid);
      rj["boundary_tail"] = boundary_tail(gs, cfg, grid);
      write_json(rep, rj);
      write_field(ex.u, u, {{"field", "u"}, {"config", to_json(cfg)}});
      write_field(ex.rho, rho, {{"field", "rho"}, {"config", to_json(cfg)}});
      out.outputs = {rep, u, rho};
      out.details = {{"ratio", ex.report.ratio}, {"rho_H1", ex.report.rho_H1}, {"ground_state", info}};
      manifest["grid"] = grid_json(grid);
      std::cout << "rho_H1 " << format_double(ex.report.rho_H1) << " ratio " << format_double(ex.report.ratio) << "\n";
    } else if (sub == c_dc) {
      manifest_path = dc_out + ".manifest.json";
      const TorusField u = read_field(dc_field);
      SolitonConfig init = dc_config.empty() ? chain_config({d, p}, dc_m, dc_R) : config_from_json(read_json(dc_config));
      if (init.params.d != u.grid().d) throw std::invalid_argument("configuration and field dimensions differ");
      d = init.params.d;
      p = init.params.p;
      if (!u.is_real()) init.complex_kind = true;
      json info;
      const GroundState gs = load_ground_state(common, d, p, &info);
      FitOptions fo;
      fo.tol = dc_tol;
      fo.max_iterations = dc_iter;
      fo.amplitudes = amplitude_mode_from_string(dc_amp);
      const auto res = fit_modulation(gs, u, init, fo);
      ensure_parent(dc_out);
      json rj = res.to_json();
      rj["grid"] = grid_json(u.grid());
      write_json(dc_out, rj);
      out.outputs = {dc_out};
      if (!dc_rho.empty()) {
        ensure_parent(dc_rho);
        write_field(res.rho, dc_rho, {{"field", "rho"}, {"config", to_json(res.config)}});
        out.outputs.push_back(dc_rho);
      }
      manifest["grid"] = grid_json(u.grid());
      out.details = {{"rho_H1", res.norms.rho_H1}, {"Gamma_u", res.norms.Gamma_u}, {"ground_state", info}};
      std::cout << "rho_H1 " << format_double(res.norms.rho_H1) << " Gamma " << format_double(res.norms.Gamma_u)
                << "\n";
    } else if (sub == c_vf) {
      fs::create_directories(vf_dir);
      manifest_path = (fs::path(vf_dir) / "manifest.json").string();
      json info;
      const GroundState gs = load_ground_state(common, d, p, &info);
      SweepOptions so;
      so.h = vf_h;
      so.n = vf_n;
      so.jobs = common.jobs;
      std::vector<SweepRecord> records;
      std::vector<VerifyReport> gating, diagnostics;
      if (vf_case == "sharp") {
        const auto Rs = parse_range(vf_R);
        records = sharp_sweep(gs, vf_m, Rs, so);
        gating.push_back(verify_upper_bound(records, vf_bracket, Rs.front(), Rs.back()));
        gating.push_back(verify_lower_bounds(records, vf_lower_bracket));
        gating.push_back(verify_intermediate_inequalities(records, 0.1, 10.0, vf_bracket));
        // dist / Gamma only grows where F departs from the identity.
        (p <= 2.0 ? gating : diagnostics).push_back(verify_sharpness_growth(records));
        diagnostics.push_back(verify_projection_ratio(records));
      } else if (vf_case == "perturbed") {
        const double R = parse_range(vf_R).front();
        const auto cfg = chain_config({d, p}, vf_m, vf_m > 1 ? R : 0.0);
        const TorusGrid grid = sweep_grid(gs, cfg, so);
        TorusField w = sample_soliton_sum(gs, cfg, grid);
        if (vf_pert == "bump") {
          const double x0 = cfg.centers[0][0] + 0.5;
          w = sample_function(grid, ScalarKind::Real, [&](const double* x) {
            double r2 = (x[0] + x0) * (x[0] + x0);
            for (int j = 1; j < grid.d; ++j) r2 += x[j] * x[j];
            return cplx(std::exp(-0.5 * r2));
          });
        }
        records = perturbed_sweep(gs, cfg, w, parse_range(vf_eps));
        gating.push_back(verify_upper_bound(records, vf_bracket, 0.0, 1e300));
        gating.push_back(verify_intermediate_inequalities(records, 0.1, 10.0, vf_bracket));
        manifest["grid"] = grid_json(grid);
      } else if (vf_case == "complex-single") {
        ComplexOptions co;
        co.sweep = so;
        gating.push_back(verify_complex_single(gs, vf_theta, parse_range(vf_eps), co));
      } else if (vf_case == "complex-multi") {
        const double R = parse_range(vf_R).front();
        const auto angles = vf_phases.empty() ? std::vector<double>(vf_m, 0.0) : parse_range(vf_phases);
        const auto cfg = chain_config({d, p}, angles.size(), R, phases_from_angles(angles));
        ComplexOptions co;
        co.c = vf_c;
        co.strict = vf_strict;
        co.bracket = vf_bracket;
        co.sweep = so;
        gating.push_back(verify_complex_multi(gs, cfg, parse_range(vf_eps), co, &records));
      } else {
        gating.push_back(verify_log_correction(gs, parse_range(vf_R)));
      }
      bool pass = !gating.empty();
      json reports = json::array(), diag = json::array();
      for (const auto& r : gating) {
        pass = pass && r.pass;
        reports.push_back(r.to_json());
      }
      for (const auto& r : diagnostics) diag.push_back(r.to_json());
      const std::string rep = (fs::path(vf_dir) / "report.json").string();
      json sweep = json::array();
      for (const auto& r : records) sweep.push_back(r.to_json());
      write_json(rep, {{"case", vf_case}, {"status", pass ? "PASS" : "FAIL"}, {"reports", reports},
                       {"diagnostics", diag}, {"records", sweep}});
      out.outputs = {rep};
      if (!records.empty()) {
        const std::string csv = (fs::path(vf_dir) / "sweep.csv").string();
        write_sweep_csv(csv, records);
        out.outputs.push_back(csv);
      }
      out.code = status_code(pass);
      out.details = {{"status", pass ? "PASS" : "FAIL"}, {"ground_state", info}};
      for (const auto& r : gating) std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "\n";
      for (const auto& r : diagnostics) std::cout << (r.pass ? "pass " : "fail ") << r.name << " (diagnostic)\n";
      std::cout << (pass ? "PASS" : "FAIL") << "\n";
    } else if (sub == c_pp) {
      manifest_path = pp_out + ".manifest.json";
      std::vector<Point> pts;
      if (!pp_points.empty()) {
        pts = read_json(pp_points).get<std::vector<Point>>();
      } else {
        if (pp_random == 0) throw std::invalid_argument("give --points or --random");
        std::mt19937_64 rng(pp_seed);
        std::uniform_real_distribution<double> coord(-pp_scale, pp_scale);
        for (std::size_t k = 0; k < pp_random; ++k) {
          Point x(static_cast<std::size_t>(pp_dim));
          for (double& v : x) v = coord(rng);
          pts.push_back(x);
        }
        manifest["seed"] = pp_seed;
      }
      const auto res = project_points(pts, pp_delta);
      ensure_parent(pp_out);
      json rj = res.to_json();
      rj["points"] = pts;
      write_json(pp_out, rj);
      out.outputs = {pp_out};
      out.details = {{"c_achieved", res.c_achieved}, {"meets_target", res.meets_target}};
      std::cout << "c_achieved " << format_double(res.c_achieved) << "\n";
    } else if (sub == c_sp) {
      manifest_path = sp_out + ".manifest.json";
      json info;
      const GroundState gs = load_ground_state(common, d, p, &info);
      SpectrumOptions so;
      so.h = sp_h;
      ensure_parent(sp_out);
      if (sp_kappa) {
        const auto k = estimate_kappa(gs, so);
        write_json(sp_out, k.to_json());
        out.details = {{"kappa", k.kappa}, {"sector", k.sector}};
        std::cout << "kappa " << format_double(k.kappa) << "\n";
      } else {
        const auto rep = sector_spectrum(gs, sp_ell, sp_neigs, so);
        write_json(sp_out, rep.to_json());
        out.details = {{"eigenvalues", rep.eigenvalues}};
        if (!sp_vectors.empty()) {
          ensure_parent(sp_vectors);
          write_eigenvector_csv(rep, sp_vectors);
        }
        for (double v : rep.eigenvalues) std::cout << format_double(v) << "\n";
      }
      out.outputs = {sp_out};
      if (!sp_vectors.empty() && !sp_kappa) out.outputs.push_back(sp_vectors);
      out.details["ground_state"] = info;
    }
  };

  auto finish = [&](const std::string& status, const std::string& message) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest["status"] = status;
    manifest["exit_code"] = out.code;
    manifest["outputs"] = out.outputs;
    manifest["results"] = out.details;
    manifest["wall_time_s"] = wall;
    if (!message.empty()) manifest["error"] = message;
    if (manifest_path.empty()) return;
    try {
      ensure_parent(manifest_path);
      write_json(manifest_path, manifest);
    } catch (const std::exception& e) {
      std::cerr << "could not write manifest: " << e.what() << "\n";
    }
  };

  try {
    run();
    finish(out.code == kExitOk ? "ok" : "FAIL", "");
    return out.code;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    out.code = kExitNumerical;
    finish("error", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << sub->help();
    out.code = kExitUsage;
    finish("usage-error", e.what());
    return kExitUsage;
  }
}

}  // namespace solistab
