#pragma once

/** @file global.hpp
    @brief Global Petrov-Galerkin solve: basis pipeline, coarse system, references, errors.
*/

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "fem.hpp"
#include "grid.hpp"
#include "harmonic.hpp"
#include "problem.hpp"
#include "projection.hpp"
#include "slod.hpp"

namespace slod {

/// Global fine discretization of one Helmholtz problem (impedance or PML).
struct GlobalProblem {
  CoarseMesh mesh;
  FineGrid fine;
  ProblemSpec spec;
  Region domain;          ///< whole-domain region
  AssembledForms forms;   ///< global fine forms
  std::unique_ptr<FormsSolver> solver;  ///< factorized lazily

  FormsSolver& factorized()
  {
    if (!solver) solver = std::make_unique<FormsSolver>(forms);
    return *solver;
  }
};

inline GlobalProblem make_global_problem(const CoarseMesh& mesh, int n_fine,
                                         const ProblemSpec& spec)
{
  GlobalProblem p;
  p.mesh = mesh;
  p.fine = build_fine_grid(mesh, n_fine);
  p.spec = spec;
  p.domain = whole_domain_region(p.fine);
  p.forms = assemble_forms(p.domain, spec);
  return p;
}

/// Q1 interpolant of an analytic source at the fine vertices.
inline VecC source_vertex_values(const SourceTerm& f, const FineGrid& fine)
{
  if (f.kind == SourceTerm::Kind::Raw) {
    if (static_cast<int>(f.raw.size()) != fine.num_vertices())
      throw std::invalid_argument("source_vertex_values: raw source size mismatch");
    return Eigen::Map<const VecC>(f.raw.data(), static_cast<Eigen::Index>(f.raw.size()));
  }
  VecC v(fine.num_vertices());
  for (int id = 0; id < fine.num_vertices(); ++id) {
    const auto c = fine.vertex_coord(fine.vertex_index(id));
    v[id] = f.evaluate(c[0], c[1], fine.dim);
  }
  return v;
}

/// Reference Q1 solution on the global fine grid; one sparse solve.
inline VecC reference_solution(GlobalProblem& problem, const SourceTerm& f,
                               SolveDiagnostics* diag = nullptr)
{
  const VecC fv = source_vertex_values(f, problem.fine);
  const VecC load = problem.forms.M.cast<cplx>() * fv;
  return problem.factorized().solve(load, diag);
}

// ---------------------------------------------------------------------------
// Basis pipeline

struct BasisOptions {
  int ell = 2;
  std::vector<int> ell_per_element;  ///< overrides ell when nonempty
  std::uint64_t seed = 0;
  double drop_tol = 1e-12;
  int sample_factor = 5;  ///< samples = factor * #T_{H,omega}
  bool translation_reuse = false;  ///< reuse interior bases by translation (homogeneous media)
  double tau_cond = 1e3;
};

struct BasisSet {
  std::vector<LocalBasisPair> bases;  ///< one per coarse element, element order
  std::vector<StabilizationInput> stabilization_inputs;
  std::vector<int> chosen_candidate;
  RieszReport riesz;
  double max_patch_residual = 0.0;
  std::vector<std::string> warnings;
  double offline_seconds = 0.0;
};

namespace detail {

struct PatchWork {
  PatchIndexSet patch;
  Region region;
  LocalSourceSelection selection;
  std::unique_ptr<AssembledForms> forms;
  std::unique_ptr<FormsSolver> solver;
};

inline PatchWork run_patch_pipeline(const GlobalProblem& problem, int T, int ell,
                                    const BasisOptions& opt)
{
  PatchWork w;
  w.patch = element_patch(problem.mesh, T, ell);
  if (w.patch.equals_domain)
    throw std::runtime_error("basis pipeline: patch of element " + std::to_string(T) +
                             " coincides with domain; decrease l");
  w.region = restrict_region(problem.fine, w.patch);
  w.forms = std::make_unique<AssembledForms>(assemble_forms(w.region, problem.spec));
  w.solver = std::make_unique<FormsSolver>(*w.forms);

  const auto raw = sample_harmonic_space(*w.solver, patch_seed(opt.seed, T, ell),
                                         opt.sample_factor * w.region.num_coarse_elements());
  const auto ortho = orthonormalize_energy(raw, *w.forms, opt.drop_tol);
  const int d = problem.mesh.dim;
  const int q = std::min(w.region.num_coarse_elements(), (d == 1 ? ell : ell * ell) + 1);
  w.selection = compute_local_source(w.region, ortho, q);
  return w;
}

}  // namespace detail

/** Build the localized basis pair for every coarse element.

    Interior elements take their unique SVD minimizer and are solved in one
    pass; boundary-affected elements go through the stabilization sweep first
    and are solved in a second pass.
*/
inline BasisSet build_basis(GlobalProblem& problem, const BasisOptions& opt)
{
  const auto t0 = std::chrono::steady_clock::now();
  const int n = problem.mesh.num_elements();
  BasisSet set;
  set.bases.resize(n);
  set.stabilization_inputs.resize(n);

  auto ell_of = [&](int T) {
    return opt.ell_per_element.empty() ? opt.ell : opt.ell_per_element[T];
  };

  // optional translation reuse: one representative interior patch per l
  const bool reuse = opt.translation_reuse && problem.spec.coefficient.is_homogeneous() &&
                     problem.spec.bc == BoundaryCondition::Impedance &&
                     opt.ell_per_element.empty();
  int representative = -1;
  if (reuse) {
    for (int T = 0; T < n; ++T)
      if (!element_patch(problem.mesh, T, opt.ell).touches_boundary) {
        representative = T;
        break;
      }
  }

  std::vector<double> residuals(n, 0.0);
  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
  for (int T = 0; T < n; ++T) {
    if (failure) continue;
    try {
      const int ell = ell_of(T);
      if (reuse && representative >= 0 && T != representative) {
        const auto patch = element_patch(problem.mesh, T, ell);
        if (!patch.touches_boundary) continue;  // filled from the representative below
      }
      auto work = detail::run_patch_pipeline(problem, T, ell, opt);

      StabilizationInput in;
      in.element = T;
      in.boundary_affected = work.patch.touches_boundary;
      in.support = work.region.coarse_element_ids(problem.mesh);
      in.candidates = work.selection.candidates;

      LocalBasisPair pair;
      pair.element = T;
      pair.ell = ell;
      pair.region = work.region;
      pair.spectrum = work.selection.spectrum;
      if (!in.boundary_affected) {
        pair.g_coeffs = work.selection.candidates.front().coeffs;
        pair.sigma = work.selection.candidates.front().sigma;
        SolveDiagnostics diag;
        solve_local_basis(*work.solver, pair, &diag);
        residuals[T] = diag.relative_residual;
      }
      set.bases[T] = std::move(pair);
      set.stabilization_inputs[T] = std::move(in);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  if (reuse && representative >= 0) {
    const auto& rep = set.bases[representative];
    for (int T = 0; T < n; ++T) {
      if (T == representative) continue;
      const auto patch = element_patch(problem.mesh, T, opt.ell);
      if (patch.touches_boundary) continue;
      LocalBasisPair pair;
      pair.element = T;
      pair.ell = opt.ell;
      pair.region = restrict_region(problem.fine, patch);
      pair.spectrum = rep.spectrum;
      pair.sigma = rep.sigma;
      pair.g_coeffs = rep.g_coeffs;
      pair.phi = rep.phi;
      pair.phi_adj = rep.phi_adj;
      StabilizationInput in;
      in.element = T;
      in.boundary_affected = false;
      in.support = pair.region.coarse_element_ids(problem.mesh);
      in.candidates = set.stabilization_inputs[representative].candidates;
      set.bases[T] = std::move(pair);
      set.stabilization_inputs[T] = std::move(in);
    }
  }

  auto stab = stabilize_boundary_sources(set.stabilization_inputs, opt.tau_cond);
  set.chosen_candidate = stab.chosen;
  set.warnings = std::move(stab.warnings);

  // second pass: solve boundary-affected elements with their final sources
#pragma omp parallel for schedule(dynamic)
  for (int T = 0; T < n; ++T) {
    if (failure || !set.stabilization_inputs[T].boundary_affected) continue;
    try {
      auto& pair = set.bases[T];
      const auto& cand = set.stabilization_inputs[T].candidates[set.chosen_candidate[T]];
      pair.g_coeffs = cand.coeffs;
      pair.sigma = cand.sigma;
      const auto forms = assemble_forms(pair.region, problem.spec);
      FormsSolver solver(forms);
      SolveDiagnostics diag;
      solve_local_basis(solver, pair, &diag);
      residuals[T] = diag.relative_residual;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  for (double r : residuals) set.max_patch_residual = std::max(set.max_patch_residual, r);

  set.riesz = riesz_condition(set.stabilization_inputs, set.chosen_candidate, n);
  if (set.riesz.condition > 1e6)
    throw std::runtime_error("build_basis: Riesz condition " +
                             std::to_string(set.riesz.condition) +
                             " exceeds 1e6; increase l");
  set.offline_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return set;
}

// ---------------------------------------------------------------------------
// Coarse system

struct CoarseSystem {
  SpMatC matrix;  ///< entry (T', T) = a(phi_T, phi*_{T'})
  VecC load;      ///< entry T' = (f, phi*_{T'})
};

inline CoarseSystem assemble_coarse_system(const BasisSet& set, GlobalProblem& problem,
                                           const SourceTerm& f)
{
  const int n = problem.mesh.num_elements();
  const int ng = problem.fine.num_vertices();
  CoarseSystem sys;
  sys.load.resize(n);

  const VecC fv = source_vertex_values(f, problem.fine);
  const VecC Mf = problem.forms.M.cast<cplx>() * fv;
  for (int T = 0; T < n; ++T) {
    const auto& r = set.bases[T].region;
    cplx acc = 0.0;
    for (int lid = 0; lid < r.num_local_vertices(); ++lid)
      acc += std::conj(set.bases[T].phi_adj[lid]) * Mf[r.global_vertex_id(lid)];
    sys.load[T] = acc;
  }

  auto boxes_overlap = [](const Region& a, const Region& b) {
    for (int ax = 0; ax < 2; ++ax)
      if (a.chi[ax] < b.clo[ax] || b.chi[ax] < a.clo[ax]) return false;
    return true;
  };

  std::vector<Eigen::Triplet<cplx>> trip;
  VecC scratch = VecC::Zero(ng);
  std::vector<int> touched;
  touched.reserve(1 << 12);
  for (int T = 0; T < n; ++T) {
    const auto& rT = set.bases[T].region;
    // w = K_glob * zero-extension of phi_T, evaluated only on touched rows
    for (int lid = 0; lid < rT.num_local_vertices(); ++lid) {
      const cplx v = set.bases[T].phi[lid];
      if (v == cplx(0.0, 0.0)) continue;
      const int col = rT.global_vertex_id(lid);
      for (SpMatC::InnerIterator it(problem.forms.K, col); it; ++it) {
        if (scratch[it.row()] == cplx(0.0, 0.0)) touched.push_back(static_cast<int>(it.row()));
        scratch[it.row()] += it.value() * v;
      }
    }
    for (int Tp = 0; Tp < n; ++Tp) {
      const auto& rP = set.bases[Tp].region;
      if (!boxes_overlap(rT, rP)) continue;
      cplx acc = 0.0;
      for (int lid = 0; lid < rP.num_local_vertices(); ++lid)
        acc += std::conj(set.bases[Tp].phi_adj[lid]) * scratch[rP.global_vertex_id(lid)];
      trip.emplace_back(Tp, T, acc);
    }
    for (int row : touched) scratch[row] = cplx(0.0, 0.0);
    touched.clear();
  }
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

// ---------------------------------------------------------------------------
// Errors and reports

struct ErrorReport {
  double rel_l2 = 0.0, rel_v = 0.0, rel_va = 0.0;
  double abs_v = 0.0;
};

/// Relative errors of u against u_ref; PML mode restricts to the physical box.
inline ErrorReport compute_errors(const VecC& u, const VecC& u_ref, GlobalProblem& problem,
                                  std::optional<Box2> restrict_box = std::nullopt)
{
  if (u.size() != u_ref.size())
    throw std::invalid_argument("compute_errors: mismatched fine grids");
  const VecC diff = u - u_ref;
  NormReport nd, nr;
  if (restrict_box) {
    const auto rn = restricted_norm_matrices(problem.domain, problem.spec, *restrict_box);
    nd = rn.eval(diff);
    nr = rn.eval(u_ref);
  } else {
    nd = norms(diff, problem.forms);
    nr = norms(u_ref, problem.forms);
  }
  ErrorReport e;
  e.abs_v = nd.v;
  e.rel_l2 = nr.l2 > 0 ? nd.l2 / nr.l2 : nd.l2;
  e.rel_v = nr.v > 0 ? nd.v / nr.v : nd.v;
  e.rel_va = nr.v_a > 0 ? nd.v_a / nr.v_a : nd.v_a;
  return e;
}

struct SolutionReport {
  VecC coarse_coeffs;
  VecC fine_field;  ///< u_{H,l} on the global fine grid
  VecC reference;
  ErrorReport errors;
  std::vector<double> sigma_per_element;
  double riesz_condition = 0.0;
  double coarse_residual = 0.0;
  double max_patch_residual = 0.0;
  double offline_seconds = 0.0;
  double online_seconds = 0.0;
  std::vector<std::string> warnings;
};

/// Assemble and solve the localized Petrov-Galerkin system, reconstruct the
/// fine-scale field and compare with the global fine reference.
inline SolutionReport solve_slod(GlobalProblem& problem, const SourceTerm& f, BasisSet& set)
{
  const auto t0 = std::chrono::steady_clock::now();
  const int n = problem.mesh.num_elements();
  auto sys = assemble_coarse_system(set, problem, f);

  Eigen::SparseLU<SpMatC> lu(sys.matrix);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("solve_slod: coarse matrix singular; increase l");
  SolutionReport rep;
  rep.coarse_coeffs = lu.solve(sys.load);
  const double ln = sys.load.norm();
  rep.coarse_residual = ln > 0 ? (sys.matrix * rep.coarse_coeffs - sys.load).norm() / ln : 0.0;

  rep.fine_field = VecC::Zero(problem.fine.num_vertices());
  for (int T = 0; T < n; ++T)
    scatter_add(set.bases[T].region, set.bases[T].phi, rep.fine_field, rep.coarse_coeffs[T]);
  rep.online_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  rep.reference = reference_solution(problem, f);
  std::optional<Box2> box;
  if (problem.spec.bc == BoundaryCondition::Pml) {
    const double w = problem.spec.pml_layer_cells * problem.mesh.H;
    box = Box2{w, 1.0 - w, w, 1.0 - w};
  }
  rep.errors = compute_errors(rep.fine_field, rep.reference, problem, box);
  for (auto& b : set.bases) rep.sigma_per_element.push_back(b.sigma);
  rep.riesz_condition = set.riesz.condition;
  rep.max_patch_residual = set.max_patch_residual;
  rep.offline_seconds = set.offline_seconds;
  rep.warnings = set.warnings;
  return rep;
}

// ---------------------------------------------------------------------------
// Desk-scale oracles

struct LocalizationProbe {
  double abs_error = 0.0;  ///< ||| phi - phi_loc |||
  double rel_error = 0.0;  ///< relative to ||| phi |||
  double sigma = 0.0;
};

/// Compare the localized basis with the global response to the same source.
/// Requires one global fine solve; acceptance/diagnostic use only.
inline LocalizationProbe localization_error_probe(GlobalProblem& problem,
                                                  const LocalBasisPair& pair)
{
  const int n = problem.mesh.num_elements();
  P0Vector g_global{VecC::Zero(n)};
  const auto ids = pair.region.coarse_element_ids(problem.mesh);
  for (std::size_t k = 0; k < ids.size(); ++k)
    g_global.values[ids[k]] = pair.g_coeffs[static_cast<int>(k)];
  const VecC load = p0_load(g_global, problem.domain);
  const VecC phi_global = problem.factorized().solve(load);
  const VecC phi_loc = zero_extend(pair.region, pair.phi, problem.fine.num_vertices());

  LocalizationProbe probe;
  probe.abs_error = norms(phi_global - phi_loc, problem.forms).v;
  const double ref = norms(phi_global, problem.forms).v;
  probe.rel_error = ref > 0 ? probe.abs_error / ref : probe.abs_error;
  probe.sigma = pair.sigma;
  return probe;
}

/// Prototypical (non-localized) Petrov-Galerkin solution; needs one global
/// solve per coarse element, so only small meshes are admitted.
inline VecC ideal_method_solution(GlobalProblem& problem, const SourceTerm& f,
                                  int max_elements = 256)
{
  const int n = problem.mesh.num_elements();
  if (n > max_elements)
    throw std::runtime_error("ideal_method_solution: mesh too large for the desk-scale oracle");
  auto& solver = problem.factorized();

  std::vector<VecC> trial(n);
  for (int T = 0; T < n; ++T) {
    P0Vector ind{VecC::Zero(n)};
    ind.values[T] = 1.0;
    trial[T] = solver.solve(p0_load(ind, problem.domain));
  }
  // test basis: L* 1_T = conj(L 1_T) since the indicator is real
  MatC A(n, n);
  VecC b(n);
  const VecC fv = source_vertex_values(f, problem.fine);
  const VecC Mf = problem.forms.M.cast<cplx>() * fv;
  for (int Tp = 0; Tp < n; ++Tp) {
    const VecC test = trial[Tp].conjugate();
    for (int T = 0; T < n; ++T) A(Tp, T) = test.dot(problem.forms.K * trial[T]);
    b[Tp] = test.dot(Mf);
  }
  const VecC c = A.partialPivLu().solve(b);
  VecC u = VecC::Zero(problem.fine.num_vertices());
  for (int T = 0; T < n; ++T) u += c[T] * trial[T];
  return u;
}

}  // namespace slod
