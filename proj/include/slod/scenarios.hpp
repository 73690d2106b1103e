#pragma once

/** @file scenarios.hpp
    @brief Config-driven experiment harness behind the CLI.

    Each scenario writes machine-readable outputs (results.csv, spectrum.csv,
    binary fields, run_manifest.json) into its own output directory and returns
    a one-line summary.
*/

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "global.hpp"
#include "io.hpp"

namespace slod {

struct ExperimentConfig {
  std::string scenario = "spectrum";
  int dim = 2;
  double kappa = 16.0;
  std::vector<int> coarse = {16};
  std::vector<int> ell = {1, 2, 3};
  int fine = 256;
  std::uint64_t seed = 0;
  double eps = 1.0 / 16.0;          ///< inclusion parameter (heterogeneous scenario)
  int pml_layer = 4;                ///< PML width in coarse cells
  std::string source;               ///< "constant" | "sincos" | "point"; empty = scenario default
  std::array<double, 2> source_center{0.5, 0.5};
  bool source_center_set = false;
  double source_radius = 0.05;
  double source_amplitude = 1e4;
  std::string out_dir = "slod-out";
  double adaptive_tol = 1e-6;
  double drop_tol = 1e-12;
  double tau_cond = 1e3;
  double friedrichs = 1.0;
  bool translation_reuse = false;
  std::vector<std::string> warnings;  ///< resolution-condition warnings
};

inline const std::vector<std::pair<std::string, std::string>>& scenario_catalog()
{
  static const std::vector<std::pair<std::string, std::string>> catalog = {
      {"spectrum", "singular value spectra of one interior patch over the l list"},
      {"localization", "relative V-norm error vs l for f = 1 over the coarse list"},
      {"convergence", "relative V-norm error vs H per l for the sin/cos source"},
      {"heterogeneous", "high-contrast inclusions with a point source, V-A-norm error"},
      {"pml", "absorbing-layer run with a centered point source, physical-domain error"},
      {"adaptive", "per-element oversampling orders chosen from the sigma indicators"},
  };
  return catalog;
}

namespace detail {

inline void check_known_keys(const nlohmann::json& j)
{
  static const std::vector<std::string> known = {
      "scenario", "dim", "kappa", "coarse", "ell", "fine", "seed", "eps",
      "pml_layer", "source", "source_center", "source_radius", "source_amplitude",
      "out", "adaptive_tol", "drop_tol", "tau_cond", "friedrichs", "translation_reuse"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw std::invalid_argument("config: unknown key '" + it.key() + "'");
  }
}

}  // namespace detail

/// Parse, apply defaults, cross-check and attach resolution warnings.
inline ExperimentConfig validate_config(const nlohmann::json& j)
{
  detail::check_known_keys(j);
  ExperimentConfig c;
  c.scenario = j.value("scenario", c.scenario);
  c.dim = j.value("dim", c.dim);
  c.kappa = j.value("kappa", c.kappa);
  if (j.contains("coarse")) c.coarse = j.at("coarse").get<std::vector<int>>();
  if (j.contains("ell")) c.ell = j.at("ell").get<std::vector<int>>();
  c.fine = j.value("fine", c.fine);
  c.seed = j.value("seed", c.seed);
  c.eps = j.value("eps", c.eps);
  c.pml_layer = j.value("pml_layer", c.pml_layer);
  c.source = j.value("source", c.source);
  if (j.contains("source_center")) {
    auto v = j.at("source_center").get<std::vector<double>>();
    if (v.size() != 2) throw std::invalid_argument("config: source_center needs 2 entries");
    c.source_center = {v[0], v[1]};
    c.source_center_set = true;
  }
  c.source_radius = j.value("source_radius", c.source_radius);
  c.source_amplitude = j.value("source_amplitude", c.source_amplitude);
  c.out_dir = j.value("out", c.out_dir);
  c.adaptive_tol = j.value("adaptive_tol", c.adaptive_tol);
  c.drop_tol = j.value("drop_tol", c.drop_tol);
  c.tau_cond = j.value("tau_cond", c.tau_cond);
  c.friedrichs = j.value("friedrichs", c.friedrichs);
  c.translation_reuse = j.value("translation_reuse", c.translation_reuse);

  bool known_scenario = false;
  for (auto& [name, desc] : scenario_catalog()) known_scenario |= name == c.scenario;
  if (!known_scenario) throw std::invalid_argument("config: unknown scenario '" + c.scenario + "'");
  if (c.dim != 1 && c.dim != 2) throw std::invalid_argument("config: dim must be 1 or 2");
  if (c.coarse.empty()) throw std::invalid_argument("config: coarse list is empty");
  if (c.ell.empty()) throw std::invalid_argument("config: ell list is empty");
  if (!c.source.empty() && c.source != "constant" && c.source != "sincos" && c.source != "point")
    throw std::invalid_argument("config: unknown source '" + c.source + "'");
  for (int n : c.coarse) {
    if (n < 2) throw std::invalid_argument("config: coarse n must be >= 2");
    if (c.fine < n || c.fine % n != 0)
      throw std::invalid_argument("config: fine " + std::to_string(c.fine) +
                                  " not divisible by coarse " + std::to_string(n));
  }
  for (int n : c.coarse) {
    const double H = 1.0 / n;
    if (H * c.kappa > M_PI / std::sqrt(2.0))
      c.warnings.push_back("resolution: H*kappa = " + std::to_string(H * c.kappa) +
                           " exceeds pi/sqrt(2) for coarse n = " + std::to_string(n));
    for (int ell : c.ell)
      if (H * c.kappa * ell * c.friedrichs > 1.0 / std::sqrt(2.0))
        c.warnings.push_back("patch resolution: H*kappa*l*C_F = " +
                             std::to_string(H * c.kappa * ell * c.friedrichs) +
                             " exceeds 1/sqrt(2) for coarse n = " + std::to_string(n) +
                             ", l = " + std::to_string(ell));
  }
  return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c)
{
  nlohmann::json j;
  j["scenario"] = c.scenario;
  j["dim"] = c.dim;
  j["kappa"] = c.kappa;
  j["coarse"] = c.coarse;
  j["ell"] = c.ell;
  j["fine"] = c.fine;
  j["seed"] = c.seed;
  j["eps"] = c.eps;
  j["pml_layer"] = c.pml_layer;
  j["source"] = c.source;
  j["source_center"] = {c.source_center[0], c.source_center[1]};
  j["source_radius"] = c.source_radius;
  j["source_amplitude"] = c.source_amplitude;
  j["out"] = c.out_dir;
  j["adaptive_tol"] = c.adaptive_tol;
  j["drop_tol"] = c.drop_tol;
  j["tau_cond"] = c.tau_cond;
  j["friedrichs"] = c.friedrichs;
  j["translation_reuse"] = c.translation_reuse;
  return j;
}

struct ScenarioSummary {
  std::string label;
  double value = 0.0;
};

namespace detail {

inline SourceTerm resolve_source(const ExperimentConfig& c)
{
  std::string kind = c.source;
  std::array<double, 2> center = c.source_center;
  if (kind.empty()) {
    if (c.scenario == "convergence") kind = "sincos";
    else if (c.scenario == "heterogeneous" || c.scenario == "pml") kind = "point";
    else kind = "constant";
  }
  if (kind == "point" && !c.source_center_set)
    center = c.scenario == "heterogeneous" ? std::array<double, 2>{0.125, 0.5}
                                           : std::array<double, 2>{0.5, 0.5};
  if (kind == "constant") return SourceTerm::constant_source();
  if (kind == "sincos") return SourceTerm::sin_cos();
  return SourceTerm::point_source(center[0], center[1], c.source_radius, c.source_amplitude);
}

inline ProblemSpec resolve_spec(const ExperimentConfig& c)
{
  ProblemSpec spec;
  spec.kappa = c.kappa;
  spec.friedrichs_constant = c.friedrichs;
  spec.pml_layer_cells = c.pml_layer;
  if (c.scenario == "heterogeneous") spec.coefficient = CoefficientField::periodic_inclusions(c.eps);
  if (c.scenario == "pml") spec.bc = BoundaryCondition::Pml;
  return spec;
}

inline BasisOptions resolve_basis_options(const ExperimentConfig& c, int ell)
{
  BasisOptions opt;
  opt.ell = ell;
  opt.seed = c.seed;
  opt.drop_tol = c.drop_tol;
  opt.tau_cond = c.tau_cond;
  opt.translation_reuse = c.translation_reuse;
  return opt;
}

inline void write_manifest(const ExperimentConfig& c, const std::filesystem::path& dir)
{
  nlohmann::json j;
  j["config"] = config_to_json(c);
  j["warnings"] = c.warnings;
  j["versions"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"format", "SLODFIELD v1"}};
  std::ofstream out(dir / "run_manifest.json");
  out << j.dump(2) << "\n";
}

}  // namespace detail

inline ScenarioSummary run_scenario(const ExperimentConfig& cfg)
{
  namespace fs = std::filesystem;
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  detail::write_manifest(cfg, dir);
  const SourceTerm f = detail::resolve_source(cfg);
  ScenarioSummary summary;

  if (cfg.scenario == "spectrum") {
    const auto mesh = build_cartesian_mesh(cfg.dim, cfg.coarse.front());
    auto problem = make_global_problem(mesh, cfg.fine, detail::resolve_spec(cfg));
    const int mid = mesh.n_per_dim / 2;
    const int T = mesh.element_id({mid, cfg.dim == 1 ? 0 : mid});
    CsvWriter csv(dir / "spectrum.csv", {"element_id", "ell", "index", "sigma"});
    double last_sigma = 0.0;
    for (int ell : cfg.ell) {
      const auto work = detail::run_patch_pipeline(problem, T, ell,
                                                   detail::resolve_basis_options(cfg, ell));
      for (int i = 0; i < work.selection.spectrum.size(); ++i)
        csv.row(T, ell, i, work.selection.spectrum[i]);
      last_sigma = work.selection.candidates.front().sigma;
    }
    summary = {"sigma_min at largest l", last_sigma};
  } else if (cfg.scenario == "localization" || cfg.scenario == "convergence") {
    CsvWriter csv(dir / "results.csv",
                  {"kappa", "n_coarse", "H", "ell", "rel_v_error", "rel_l2_error", "sigma_max",
                   "riesz_condition", "offline_seconds", "online_seconds"});
    double headline = 0.0;
    for (int n : cfg.coarse) {
      const auto mesh = build_cartesian_mesh(cfg.dim, n);
      auto problem = make_global_problem(mesh, cfg.fine, detail::resolve_spec(cfg));
      for (int ell : cfg.ell) {
        auto basis = build_basis(problem, detail::resolve_basis_options(cfg, ell));
        auto rep = solve_slod(problem, f, basis);
        double sigma_max = 0.0;
        for (double s : rep.sigma_per_element) sigma_max = std::max(sigma_max, s);
        csv.row(cfg.kappa, n, mesh.H, ell, rep.errors.rel_v, rep.errors.rel_l2, sigma_max,
                rep.riesz_condition, rep.offline_seconds, rep.online_seconds);
        headline = rep.errors.rel_v;
      }
    }
    summary = {"relative V-norm error (last run)", headline};
  } else if (cfg.scenario == "heterogeneous" || cfg.scenario == "pml") {
    const auto mesh = build_cartesian_mesh(cfg.dim, cfg.coarse.front());
    auto problem = make_global_problem(mesh, cfg.fine, detail::resolve_spec(cfg));
    auto basis = build_basis(problem, detail::resolve_basis_options(cfg, cfg.ell.front()));
    auto rep = solve_slod(problem, f, basis);
    write_field(dir / "field_slod.bin", rep.fine_field, problem.fine, cfg.kappa, "u_slod");
    write_field(dir / "field_reference.bin", rep.reference, problem.fine, cfg.kappa, "u_reference");
    CsvWriter csv(dir / "results.csv",
                  {"kappa", "n_coarse", "ell", "rel_v_error", "rel_va_error", "rel_l2_error",
                   "riesz_condition", "offline_seconds", "online_seconds"});
    csv.row(cfg.kappa, cfg.coarse.front(), cfg.ell.front(), rep.errors.rel_v, rep.errors.rel_va,
            rep.errors.rel_l2, rep.riesz_condition, rep.offline_seconds, rep.online_seconds);
    summary = cfg.scenario == "pml"
                  ? ScenarioSummary{"relative V-norm error on the physical domain",
                                    rep.errors.rel_v}
                  : ScenarioSummary{"relative V-A-norm error", rep.errors.rel_va};
  } else if (cfg.scenario == "adaptive") {
    const auto mesh = build_cartesian_mesh(cfg.dim, cfg.coarse.front());
    auto problem = make_global_problem(mesh, cfg.fine, detail::resolve_spec(cfg));
    const int ell_min = *std::min_element(cfg.ell.begin(), cfg.ell.end());
    const int ell_max = *std::max_element(cfg.ell.begin(), cfg.ell.end());
    const int n = mesh.num_elements();
    std::vector<std::vector<double>> sigma_table(n);
    for (int T = 0; T < n; ++T) {
      for (int ell = ell_min; ell <= ell_max; ++ell) {
        const auto work = detail::run_patch_pipeline(problem, T, ell,
                                                     detail::resolve_basis_options(cfg, ell));
        const double s = work.selection.candidates.front().sigma;
        sigma_table[T].push_back(s);
        if (s <= cfg.adaptive_tol) {
          // smaller sigma at larger l (monotone); the threshold rule never looks past this
          for (int rest = ell + 1; rest <= ell_max; ++rest) sigma_table[T].push_back(s);
          break;
        }
      }
    }
    auto adapt = adapt_oversampling(sigma_table, cfg.adaptive_tol, ell_min, ell_max);
    BasisOptions opt = detail::resolve_basis_options(cfg, ell_min);
    opt.ell_per_element = adapt.ell_of_element;
    auto basis = build_basis(problem, opt);
    auto rep = solve_slod(problem, f, basis);
    CsvWriter csv(dir / "results.csv", {"element_id", "ell", "sigma"});
    for (int T = 0; T < n; ++T) csv.row(T, adapt.ell_of_element[T], rep.sigma_per_element[T]);
    for (auto& w : adapt.warnings) rep.warnings.push_back(w);
    summary = {"relative V-norm error (adaptive l)", rep.errors.rel_v};
  } else {
    throw std::invalid_argument("run_scenario: unknown scenario " + cfg.scenario);
  }
  return summary;
}

}  // namespace slod
