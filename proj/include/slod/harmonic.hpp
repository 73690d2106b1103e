#pragma once

/** @file harmonic.hpp
    @brief Randomized sampling of the Helmholtz-harmonic space on a patch.

    The space Y of functions with a_omega(v, y) = 0 for all v vanishing on
    Gamma is sampled with random discrete Dirichlet data on Gamma and then
    orthonormalized in the patch energy norm. The RNG is hand-rolled from
    splitmix64 so that runs are bitwise reproducible across platforms.
*/

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cstdint>

#include "fem.hpp"
#include "grid.hpp"

namespace slod {

namespace detail {

struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next()
  {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  /// uniform on [-1, 1)
  double uniform_sym() { return 2.0 * ((next() >> 11) * 0x1.0p-53) - 1.0; }
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
{
  SplitMix64 s(seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b + 0x632be59bd9b4e019ULL));
  s.next();
  return s.next();
}

}  // namespace detail

/// Stable per-patch RNG seed derived from the global seed and (element id, order).
inline std::uint64_t patch_seed(std::uint64_t seed, int element_id, int ell)
{
  return detail::mix_seed(seed, static_cast<std::uint64_t>(element_id),
                          static_cast<std::uint64_t>(ell));
}

struct HarmonicBasis {
  enum class Stage { Raw, EnergyOrthonormal };
  Stage stage = Stage::Raw;
  MatC columns;  ///< full local vectors, one sample / basis member per column
  int rank = 0;
  double drop_tol = 0.0;
  std::uint64_t seed = 0;
};

/** Sample the discretely Helmholtz-harmonic space on a patch.

    Each sample prescribes iid values (real and imaginary parts uniform on
    [-1,1]) at the fine Gamma vertices and extends them so that a_omega(v, y)
    vanishes for all v in V_{omega,Gamma}. Dirichlet DOFs on d(Omega) (PML
    mode) stay zero.
*/
inline HarmonicBasis sample_harmonic_space(const FormsSolver& solver, std::uint64_t seed,
                                           int count = -1)
{
  const AssembledForms& forms = solver.forms();
  const Region& region = forms.region;
  if (region.gamma_vertices.empty())
    throw std::runtime_error("sample_harmonic_space: patch coincides with domain; decrease l");
  if (count < 0) count = 5 * region.num_coarse_elements();

  detail::SplitMix64 rng(seed);
  HarmonicBasis basis;
  basis.stage = HarmonicBasis::Stage::Raw;
  basis.seed = seed;
  basis.columns.resize(region.num_local_vertices(), count);
  VecC trace = VecC::Zero(region.num_local_vertices());
  for (int s = 0; s < count; ++s) {
    for (int v : region.gamma_vertices) trace[v] = cplx(rng.uniform_sym(), rng.uniform_sym());
    basis.columns.col(s) = solver.harmonic_extension(trace);
  }
  basis.rank = count;
  return basis;
}

/** Orthonormalize a raw sample set in the energy inner product
    (grad u, grad v)_omega + kappa^2 (u, v)_omega.

    Near-dependent directions are dropped via an eigen-decomposition of the
    raw energy Gram matrix; every retained column is a linear combination of
    raw columns and hence still discretely Helmholtz-harmonic.
*/
inline HarmonicBasis orthonormalize_energy(const HarmonicBasis& raw, const AssembledForms& forms,
                                           double drop_tol = 1e-12)
{
  if (raw.columns.cols() == 0) throw std::runtime_error("orthonormalize_energy: empty basis");
  const double k2 = forms.spec.kappa * forms.spec.kappa;
  MatC Ey = forms.S1.cast<cplx>() * raw.columns + k2 * (forms.M.cast<cplx>() * raw.columns);
  MatC gram = raw.columns.adjoint() * Ey;
  gram = 0.5 * (gram + gram.adjoint().eval());  // symmetrize roundoff

  Eigen::SelfAdjointEigenSolver<MatC> es(gram);
  const auto& evals = es.eigenvalues();  // ascending
  const double lmax = evals[evals.size() - 1];
  int keep = 0;
  for (int i = 0; i < evals.size(); ++i)
    if (evals[i] > drop_tol * lmax) ++keep;
  if (keep == 0 || lmax <= 0.0)
    throw std::runtime_error("orthonormalize_energy: rank 0 after dropping");

  const int p = static_cast<int>(evals.size());
  MatC weights(p, keep);
  for (int j = 0; j < keep; ++j) {
    const int src = p - keep + j;  // largest eigenvalues, descending energy content
    weights.col(j) = es.eigenvectors().col(src) / std::sqrt(evals[src]);
  }
  HarmonicBasis out;
  out.stage = HarmonicBasis::Stage::EnergyOrthonormal;
  out.columns = raw.columns * weights;
  out.rank = keep;
  out.drop_tol = drop_tol;
  out.seed = raw.seed;
  return out;
}

}  // namespace slod
