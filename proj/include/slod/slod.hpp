#pragma once

/** @file slod.hpp
    @brief Super-localized source selection, patch basis solves and stability checks.

    Per coarse element: an SVD of the projected harmonic space picks the
    piecewise-constant source g whose Helmholtz response decays fastest; the
    localized basis pair (primal and adjoint) solves the coercive patch problem
    with that source. The smallest singular value sigma_T doubles as a
    quasi-local error indicator.
*/

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fem.hpp"
#include "grid.hpp"
#include "harmonic.hpp"
#include "projection.hpp"

namespace slod {

struct SourceCandidate {
  double sigma = 0.0;
  Eigen::VectorXcd coeffs;  ///< unit Euclidean norm, on the region's coarse elements
};

struct LocalSourceSelection {
  Eigen::VectorXd spectrum;  ///< singular values, descending
  std::vector<SourceCandidate> candidates;  ///< ascending sigma; front() is the minimizer
  bool ambiguous = false;  ///< several near-zero singular values
};

namespace detail {

/// Deterministic phase fix: rotate so the largest-magnitude coefficient is
/// real positive; ties broken by lowest element index.
inline void fix_phase(Eigen::VectorXcd& c)
{
  int best = 0;
  double best_mag = -1.0;
  for (int i = 0; i < c.size(); ++i) {
    const double m = std::abs(c[i]);
    if (m > best_mag + 1e-15 * std::max(1.0, best_mag)) {
      best_mag = m;
      best = i;
    }
  }
  if (best_mag > 0.0) c *= std::conj(c[best]) / best_mag;
}

}  // namespace detail

/** SVD of the projected harmonic space Pi_{H,omega}|_Y.

    B_{K,j} = (int_K y_j) / H^{d/2}; rows are coefficients w.r.t. the
    L2-orthonormal indicators 1_K / H^{d/2}. The source candidates are the
    P0-side singular vectors for the smallest singular values. When the
    sampled space has rank below the number of patch elements, exactly
    orthogonal sources exist and sigma = 0.
*/
inline LocalSourceSelection compute_local_source(const Region& region, const HarmonicBasis& ortho,
                                                 int num_candidates = 1)
{
  const int m = region.num_coarse_elements();
  const int p = static_cast<int>(ortho.columns.cols());
  const int d = region.dim();
  const double H = 1.0 / region.fine.n_coarse;
  const double scale = std::pow(H, 0.5 * d);

  MatC B(m, p);
  for (int j = 0; j < p; ++j)
    B.col(j) = detail::coarse_element_integrals(ortho.columns.col(j), region) / scale;

  Eigen::JacobiSVD<MatC> svd(B, Eigen::ComputeFullU);
  LocalSourceSelection sel;
  sel.spectrum = svd.singularValues();  // descending, length min(m,p)

  const int nsv = static_cast<int>(sel.spectrum.size());
  num_candidates = std::min(num_candidates, m);
  for (int k = 0; k < num_candidates; ++k) {
    SourceCandidate cand;
    const int col = m - 1 - k;  // smallest first
    cand.sigma = col < nsv ? sel.spectrum[col] : 0.0;
    cand.coeffs = svd.matrixU().col(col);
    detail::fix_phase(cand.coeffs);
    sel.candidates.push_back(std::move(cand));
  }
  // several near-zero singular values within 1e3 * machine eps of each other
  if (nsv >= 2) {
    const double eps_gap = 1e3 * std::numeric_limits<double>::epsilon() *
                           std::max(1.0, sel.spectrum[0]);
    if (sel.spectrum[nsv - 1] < eps_gap &&
        std::abs(sel.spectrum[nsv - 1] - sel.spectrum[nsv - 2]) < eps_gap)
      sel.ambiguous = true;
  }
  return sel;
}

/// Primal and adjoint localized basis on one patch.
struct LocalBasisPair {
  int element = -1;
  int ell = 1;
  Region region;
  Eigen::VectorXcd g_coeffs;  ///< source coefficients, unit Euclidean norm
  double sigma = 0.0;
  Eigen::VectorXd spectrum;
  VecC phi;      ///< primal basis, full local vector, zero on Gamma
  VecC phi_adj;  ///< adjoint basis phi^{loc,*}
};

/** Solve the patch problem a_omega(phi, v) = (g, v)_omega and its adjoint.

    The adjoint basis is the conjugate of the solution with conjugated source,
    realizing L* f = conj(L conj(f)) discretely.
*/
inline void solve_local_basis(const FormsSolver& solver, LocalBasisPair& pair,
                              SolveDiagnostics* diag = nullptr)
{
  P0Vector g{pair.g_coeffs};
  const VecC load = p0_load(g, pair.region);
  pair.phi = solver.solve(load, diag);
  pair.phi_adj = solver.solve(load.conjugate(), nullptr).conjugate();
}

/// Scatter a full local region vector into a global fine vector (extension by zero).
inline void scatter_add(const Region& region, const VecC& local, VecC& global_out, cplx factor = 1.0)
{
  for (int lid = 0; lid < region.num_local_vertices(); ++lid)
    global_out[region.global_vertex_id(lid)] += factor * local[lid];
}

inline VecC zero_extend(const Region& region, const VecC& local, int global_size)
{
  VecC out = VecC::Zero(global_size);
  scatter_add(region, local, out);
  return out;
}

// ---------------------------------------------------------------------------
// Boundary stabilization

struct StabilizationInput {
  int element = -1;
  bool boundary_affected = false;  ///< patch touches d(Omega)
  std::vector<int> support;        ///< global coarse element ids of the patch
  std::vector<SourceCandidate> candidates;  ///< ascending sigma
};

struct StabilizationResult {
  std::vector<int> chosen;  ///< candidate index per element
  std::vector<std::string> warnings;
};

namespace detail {

inline double window_condition(const std::vector<const StabilizationInput*>& rows,
                               const std::vector<int>& chosen,
                               const StabilizationInput& me, const Eigen::VectorXcd& cand)
{
  // union of supports -> dense window matrix
  std::map<int, int> col_of;
  for (auto* r : rows)
    for (int c : r->support) col_of.emplace(c, 0);
  for (int c : me.support) col_of.emplace(c, 0);
  int nc = 0;
  for (auto& kv : col_of) kv.second = nc++;

  MatC G(static_cast<int>(rows.size()) + 1, nc);
  G.setZero();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& cf = rows[r]->candidates[chosen[rows[r]->element]].coeffs;
    for (std::size_t k = 0; k < rows[r]->support.size(); ++k)
      G(static_cast<int>(r), col_of[rows[r]->support[k]]) = cf[static_cast<int>(k)];
  }
  for (std::size_t k = 0; k < me.support.size(); ++k)
    G(static_cast<int>(rows.size()), col_of[me.support[k]]) = cand[static_cast<int>(k)];

  Eigen::JacobiSVD<MatC> svd(G);
  const auto& sv = svd.singularValues();
  const double smin = sv[sv.size() - 1];
  return smin > 0.0 ? sv[0] / smin : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/** Deterministic sweep resolving source choices near the boundary.

    Interior elements keep their unique minimizer. Boundary-affected elements
    are visited in lexicographic order; each takes the lowest-sigma candidate
    that keeps the condition number of the local window of already-chosen
    overlapping rows below tau_cond. If none qualifies, the least-collinear
    candidate is taken and a warning recorded.
*/
inline StabilizationResult stabilize_boundary_sources(const std::vector<StabilizationInput>& inputs,
                                                      double tau_cond = 1e3)
{
  const int n = static_cast<int>(inputs.size());
  StabilizationResult res;
  res.chosen.assign(n, 0);

  std::vector<bool> processed(n, false);
  for (int e = 0; e < n; ++e)
    if (!inputs[e].boundary_affected) processed[e] = true;

  // coarse id -> elements whose support contains it, for overlap queries
  std::map<int, std::vector<int>> owners;
  for (int e = 0; e < n; ++e)
    for (int c : inputs[e].support) owners[c].push_back(e);

  for (int e = 0; e < n; ++e) {
    if (!inputs[e].boundary_affected) continue;
    // processed rows overlapping this patch
    std::vector<const StabilizationInput*> rows;
    std::vector<bool> seen(n, false);
    for (int c : inputs[e].support)
      for (int o : owners[c])
        if (o != e && processed[o] && !seen[o]) {
          seen[o] = true;
          rows.push_back(&inputs[o]);
        }

    int picked = -1;
    for (std::size_t k = 0; k < inputs[e].candidates.size(); ++k) {
      const double cond =
          detail::window_condition(rows, res.chosen, inputs[e], inputs[e].candidates[k].coeffs);
      if (cond < tau_cond) {
        picked = static_cast<int>(k);
        break;
      }
    }
    if (picked < 0) {
      // least collinear with the already-chosen overlapping rows
      double best_score = std::numeric_limits<double>::infinity();
      picked = 0;
      for (std::size_t k = 0; k < inputs[e].candidates.size(); ++k) {
        double worst = 0.0;
        for (auto* r : rows) {
          std::map<int, cplx> mine;
          for (std::size_t j = 0; j < inputs[e].support.size(); ++j)
            mine[inputs[e].support[j]] = inputs[e].candidates[k].coeffs[static_cast<int>(j)];
          cplx ip = 0.0;
          const auto& cf = r->candidates[res.chosen[r->element]].coeffs;
          for (std::size_t j = 0; j < r->support.size(); ++j) {
            auto it = mine.find(r->support[j]);
            if (it != mine.end()) ip += std::conj(cf[static_cast<int>(j)]) * it->second;
          }
          worst = std::max(worst, std::abs(ip));
        }
        if (worst < best_score) {
          best_score = worst;
          picked = static_cast<int>(k);
        }
      }
      res.warnings.push_back("element " + std::to_string(inputs[e].element) +
                             ": no candidate met the condition guard, took least-collinear");
    }
    res.chosen[e] = picked;
    processed[e] = true;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Riesz stability of the selected sources

struct RieszReport {
  double condition = 0.0;
  bool full_rank = false;
  double sigma_max = 0.0, sigma_min = 0.0;
};

/** Condition number of the global coefficient matrix G (row T = coefficients
    of g_T scattered to global P0 indices). Dense SVD for small meshes, power
    and inverse iteration through a sparse LU otherwise.
*/
inline RieszReport riesz_condition(const std::vector<StabilizationInput>& inputs,
                                   const std::vector<int>& chosen, int num_global_elements)
{
  const int n = num_global_elements;
  RieszReport rep;
  std::vector<Eigen::Triplet<cplx>> trip;
  for (std::size_t e = 0; e < inputs.size(); ++e) {
    const auto& cf = inputs[e].candidates[chosen[e]].coeffs;
    for (std::size_t k = 0; k < inputs[e].support.size(); ++k)
      trip.emplace_back(static_cast<int>(e), inputs[e].support[k], cf[static_cast<int>(k)]);
  }
  SpMatC G(n, n);
  G.setFromTriplets(trip.begin(), trip.end());

  if (n <= 1200) {
    const MatC Gd(G);
    Eigen::BDCSVD<MatC> svd(Gd);
    const auto& sv = svd.singularValues();
    rep.sigma_max = sv[0];
    rep.sigma_min = sv[sv.size() - 1];
  } else {
    // power iteration for sigma_max
    detail::SplitMix64 rng(0x510dULL);
    VecC x(n);
    for (int i = 0; i < n; ++i) x[i] = cplx(rng.uniform_sym(), rng.uniform_sym());
    x.normalize();
    double smax = 0.0;
    for (int it = 0; it < 60; ++it) {
      VecC y = G.adjoint() * (G * x).eval();
      smax = std::sqrt(y.norm());
      x = y / y.norm();
    }
    rep.sigma_max = smax;
    // inverse iteration for sigma_min
    Eigen::SparseLU<SpMatC> lu(G);
    if (lu.info() != Eigen::Success) {
      rep.sigma_min = 0.0;
      rep.condition = std::numeric_limits<double>::infinity();
      rep.full_rank = false;
      throw std::runtime_error("riesz_condition: coefficient matrix G is rank deficient");
    }
    Eigen::SparseLU<SpMatC> luH(SpMatC(G.adjoint()));
    for (int i = 0; i < n; ++i) x[i] = cplx(rng.uniform_sym(), rng.uniform_sym());
    x.normalize();
    double inv_norm = 0.0;
    for (int it = 0; it < 60; ++it) {
      VecC y = luH.solve(lu.solve(x).eval());
      inv_norm = std::sqrt(y.norm());
      x = y / y.norm();
    }
    rep.sigma_min = 1.0 / inv_norm;
  }
  rep.full_rank = rep.sigma_min > 1e-12 * std::max(1.0, rep.sigma_max);
  if (!rep.full_rank)
    throw std::runtime_error("riesz_condition: coefficient matrix G is rank deficient");
  rep.condition = rep.sigma_max / rep.sigma_min;
  return rep;
}

// ---------------------------------------------------------------------------
// Adaptive oversampling

struct AdaptiveResult {
  std::vector<int> ell_of_element;
  std::vector<std::string> warnings;
};

/** Per element, the smallest l in [l_min, l_max] with sigma_T(l) <= tol.
    sigma values are supplied by the caller (reused from the selection
    pipeline, no recomputation).
*/
inline AdaptiveResult adapt_oversampling(
    const std::vector<std::vector<double>>& sigma_per_element,  ///< [element][l - l_min]
    double tol, int ell_min, int ell_max)
{
  if (!(tol > 0)) throw std::invalid_argument("adapt_oversampling: tol must be positive");
  AdaptiveResult res;
  for (std::size_t e = 0; e < sigma_per_element.size(); ++e) {
    int chosen = ell_max;
    bool found = false;
    for (int ell = ell_min; ell <= ell_max; ++ell) {
      const double s = sigma_per_element[e][static_cast<std::size_t>(ell - ell_min)];
      if (s <= tol) {
        chosen = ell;
        found = true;
        break;
      }
    }
    if (!found)
      res.warnings.push_back("element " + std::to_string(e) + ": sigma above tol at l_max");
    res.ell_of_element.push_back(chosen);
  }
  return res;
}

}  // namespace slod
