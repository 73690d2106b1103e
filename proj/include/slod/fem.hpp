#pragma once

/** @file fem.hpp
    @brief Complex Q1 finite element assembly and sparse direct solves on regions.

    All element integrals on axis-aligned cells are closed-form; the coefficient
    A and the PML stretch factors are sampled at fine-cell centers. The combined
    operator is K = S - kappa^2 M - i kappa B with S the (A-weighted) stiffness,
    M the mass and B the boundary mass on the impedance part of the boundary.
    Dirichlet constraints (Gamma, and all of d(Omega) in PML mode) are imposed by
    elimination.
*/

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <optional>

#include "grid.hpp"
#include "problem.hpp"

namespace slod {

using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;
using MatC = Eigen::MatrixXcd;
using SpMatR = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<cplx>;

namespace detail {

/// 1D element stiffness (1/h)[[1,-1],[-1,1]] and mass (h/6)[[2,1],[1,2]].
inline void element_matrices_1d(double h, double K[2][2], double M[2][2])
{
  K[0][0] = K[1][1] = 1.0 / h;
  K[0][1] = K[1][0] = -1.0 / h;
  M[0][0] = M[1][1] = h / 3.0;
  M[0][1] = M[1][0] = h / 6.0;
}

}  // namespace detail

/// Sparse forms realizing a (resp. a_omega) on a region, on all local DOFs.
struct AssembledForms {
  Region region;
  ProblemSpec spec;
  SpMatR S1;  ///< unweighted stiffness
  SpMatR S;   ///< A-weighted stiffness
  SpMatR M;   ///< mass
  SpMatR B;   ///< boundary mass on the impedance part d(omega) \cap d(Omega)
  SpMatC K;   ///< combined operator (PML-stretched in PML mode)
  std::vector<int> dirichlet;   ///< local vertex ids with homogeneous Dirichlet data
  std::vector<int> free_list;   ///< local vertex ids of free DOFs, sorted
  std::vector<int> free_index;  ///< local vertex id -> free index, -1 if constrained

  int num_free() const { return static_cast<int>(free_list.size()); }

  /// a(u,v) = v^H K u on full local vectors.
  cplx sesquilinear(const VecC& u, const VecC& v) const { return v.dot(K * u); }
};

/// Optional axis-aligned sub-box used to restrict norm integration (PML Omega_F).
struct Box2 {
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  bool contains(double x, double y) const
  {
    return x > xmin && x < xmax && y > ymin && y < ymax;
  }
};

namespace detail {

template <class Emit>
void for_each_cell_matrix(const Region& region, const ProblemSpec& spec, bool pml, Emit&& emit)
{
  const FineGrid& g = region.fine;
  const double h = g.h;
  const double w = spec.pml_layer_cells * (1.0 / g.n_coarse);
  double K1[2][2], M1[2][2];
  element_matrices_1d(h, K1, M1);

  if (g.dim == 1) {
    double Sc[2][2], Mc[2][2];
    for (int cx = region.vlo[0]; cx < region.vhi[0]; ++cx) {
      const double xc = (cx + 0.5) * h;
      const double A = spec.coefficient.value_at(xc, 0.0);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          Sc[a][b] = A * K1[a][b];
          Mc[a][b] = M1[a][b];
        }
      int verts[2] = {region.local_vertex_id({cx, 0}), region.local_vertex_id({cx + 1, 0})};
      emit(verts, 2, Sc, Mc, nullptr, nullptr);
    }
    return;
  }

  // 2D tensor-product cells, corner order (0,0),(1,0),(0,1),(1,1)
  double Sc[4][4], Mc[4][4];
  cplx Sp[4][4], Mp[4][4];
  for (int cy = region.vlo[1]; cy < region.vhi[1]; ++cy) {
    for (int cx = region.vlo[0]; cx < region.vhi[0]; ++cx) {
      const double xc = (cx + 0.5) * h, yc = (cy + 0.5) * h;
      const double A = spec.coefficient.value_at(xc, yc);
      for (int a = 0; a < 4; ++a) {
        const int ax = a % 2, ay = a / 2;
        for (int b = 0; b < 4; ++b) {
          const int bx = b % 2, by = b / 2;
          Sc[a][b] = A * (K1[ax][bx] * M1[ay][by] + M1[ax][bx] * K1[ay][by]);
          Mc[a][b] = M1[ax][bx] * M1[ay][by];
        }
      }
      if (pml) {
        const cplx sx = 1.0 + pml_rho(xc, spec.kappa, w);
        const cplx sy = 1.0 + pml_rho(yc, spec.kappa, w);
        const cplx ax_f = A * sy / sx, ay_f = A * sx / sy, m_f = sx * sy;
        for (int a = 0; a < 4; ++a) {
          const int axi = a % 2, ayi = a / 2;
          for (int b = 0; b < 4; ++b) {
            const int bxi = b % 2, byi = b / 2;
            Sp[a][b] = ax_f * K1[axi][bxi] * M1[ayi][byi] + ay_f * M1[axi][bxi] * K1[ayi][byi];
            Mp[a][b] = m_f * M1[axi][bxi] * M1[ayi][byi];
          }
        }
      }
      int verts[4] = {region.local_vertex_id({cx, cy}), region.local_vertex_id({cx + 1, cy}),
                      region.local_vertex_id({cx, cy + 1}), region.local_vertex_id({cx + 1, cy + 1})};
      emit(verts, 4, Sc, Mc, pml ? Sp : nullptr, pml ? Mp : nullptr);
    }
  }
}

}  // namespace detail

/// Assemble all forms of a_omega (or the PML form) on a region.
inline AssembledForms assemble_forms(const Region& region, const ProblemSpec& spec)
{
  AssembledForms f;
  f.region = region;
  f.spec = spec;
  const int n = region.num_local_vertices();
  const bool pml = spec.bc == BoundaryCondition::Pml;
  if (pml && region.dim() != 2)
    throw std::invalid_argument("assemble_forms: PML supported in 2D only");
  if (pml && spec.pml_layer_cells < 1)
    throw std::invalid_argument("assemble_forms: PML layer must be at least one coarse cell");

  std::vector<Eigen::Triplet<double>> tS1, tS, tM, tB;
  std::vector<Eigen::Triplet<cplx>> tK;
  const std::size_t guess = static_cast<std::size_t>(region.dim() == 1 ? 4 : 16) *
                            static_cast<std::size_t>(region.fine.num_cells());
  tS1.reserve(guess);
  tS.reserve(guess);
  tM.reserve(guess);
  tK.reserve(guess);

  const double kappa = spec.kappa;
  detail::for_each_cell_matrix(
      region, spec, pml,
      [&](const int* verts, int nv, const auto& Sc, const auto& Mc, const cplx (*Sp)[4],
          const cplx (*Mp)[4]) {
        const FineGrid& g = region.fine;
        double K1[2][2], M1[2][2];
        detail::element_matrices_1d(g.h, K1, M1);
        for (int a = 0; a < nv; ++a)
          for (int b = 0; b < nv; ++b) {
            const int i = verts[a], j = verts[b];
            const double s = Sc[a][b], m = Mc[a][b];
            // unweighted stiffness: recompute without the coefficient factor
            double s1;
            if (nv == 2) {
              s1 = K1[a][b];
            } else {
              const int axi = a % 2, ayi = a / 2, bxi = b % 2, byi = b / 2;
              s1 = K1[axi][bxi] * M1[ayi][byi] + M1[axi][bxi] * K1[ayi][byi];
            }
            tS1.emplace_back(i, j, s1);
            tS.emplace_back(i, j, s);
            tM.emplace_back(i, j, m);
            if (pml)
              tK.emplace_back(i, j, Sp[a][b] - kappa * kappa * Mp[a][b]);
            else
              tK.emplace_back(i, j, cplx(s - kappa * kappa * m, 0.0));
          }
      });

  // impedance boundary mass on fine edges lying in d(Omega) \cap d(omega)
  if (!pml) {
    const FineGrid& g = region.fine;
    const double h = g.h;
    if (region.dim() == 1) {
      if (region.vlo[0] == 0) tB.emplace_back(region.local_vertex_id({0, 0}), region.local_vertex_id({0, 0}), 1.0);
      if (region.vhi[0] == g.n_fine) {
        const int v = region.local_vertex_id({g.n_fine, 0});
        tB.emplace_back(v, v, 1.0);
      }
    } else {
      auto add_edge = [&](int v0, int v1) {
        tB.emplace_back(v0, v0, h / 3.0);
        tB.emplace_back(v1, v1, h / 3.0);
        tB.emplace_back(v0, v1, h / 6.0);
        tB.emplace_back(v1, v0, h / 6.0);
      };
      for (int a = 0; a < 2; ++a) {
        for (int side = 0; side < 2; ++side) {
          const int fixed = side == 0 ? region.vlo[a] : region.vhi[a];
          const bool on_domain = side == 0 ? fixed == 0 : fixed == g.n_fine;
          if (!on_domain) continue;
          const int o = 1 - a;  // running axis
          for (int t = region.vlo[o]; t < region.vhi[o]; ++t) {
            std::array<int, 2> p0{}, p1{};
            p0[a] = p1[a] = fixed;
            p0[o] = t;
            p1[o] = t + 1;
            add_edge(region.local_vertex_id(p0), region.local_vertex_id(p1));
          }
        }
      }
    }
  }

  auto build = [n](std::vector<Eigen::Triplet<double>>& t) {
    SpMatR m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
  };
  f.S1 = build(tS1);
  f.S = build(tS);
  f.M = build(tM);
  f.B = build(tB);
  if (!pml && f.B.nonZeros() > 0) {
    for (int k = 0; k < f.B.outerSize(); ++k)
      for (SpMatR::InnerIterator it(f.B, k); it; ++it)
        tK.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                        cplx(0.0, -kappa * it.value()));
  }
  f.K = SpMatC(n, n);
  f.K.setFromTriplets(tK.begin(), tK.end());

  // Dirichlet set: Gamma always; in PML mode the whole domain boundary too
  f.dirichlet = region.gamma_vertices;
  if (pml) {
    f.dirichlet.insert(f.dirichlet.end(), region.domain_boundary_vertices.begin(),
                       region.domain_boundary_vertices.end());
    std::sort(f.dirichlet.begin(), f.dirichlet.end());
  }
  f.free_index.assign(n, -1);
  for (int d : f.dirichlet) f.free_index[d] = -2;
  for (int i = 0; i < n; ++i)
    if (f.free_index[i] == -1) {
      f.free_index[i] = static_cast<int>(f.free_list.size());
      f.free_list.push_back(i);
    }
  for (int d : f.dirichlet) f.free_index[d] = -1;
  if (f.free_list.empty()) throw std::runtime_error("assemble_forms: empty free DOF set");
  return f;
}

/// Convenience overload for the PML form of assemble_pml_forms.
inline AssembledForms assemble_pml_forms(const FineGrid& fine, const ProblemSpec& spec)
{
  if (spec.bc != BoundaryCondition::Pml)
    throw std::invalid_argument("assemble_pml_forms: spec.bc must be Pml");
  return assemble_forms(whole_domain_region(fine), spec);
}

struct SolveDiagnostics {
  double relative_residual = 0.0;
  bool residual_warning = false;
};

/** Sparse direct factorization of the constrained operator K_ff.

    The factorization is reused for multiple right-hand sides: patch sampling,
    basis solves and their adjoints. The operator is complex symmetric, so the
    adjoint K^H equals conj(K) and adjoint solves reduce to conjugation.
*/
class FormsSolver {
 public:
  explicit FormsSolver(const AssembledForms& forms) : forms_(&forms)
  {
    const int nf = forms.num_free();
    const int nd = static_cast<int>(forms.dirichlet.size());
    std::vector<int> dirichlet_index(forms.region.num_local_vertices(), -1);
    for (int k = 0; k < nd; ++k) dirichlet_index[forms.dirichlet[k]] = k;

    std::vector<Eigen::Triplet<cplx>> tff, tfd;
    for (int c = 0; c < forms.K.outerSize(); ++c)
      for (SpMatC::InnerIterator it(forms.K, c); it; ++it) {
        const int fi = forms.free_index[it.row()];
        if (fi < 0) continue;
        const int fj = forms.free_index[it.col()];
        if (fj >= 0)
          tff.emplace_back(fi, fj, it.value());
        else
          tfd.emplace_back(fi, dirichlet_index[it.col()], it.value());
      }
    Kff_.resize(nf, nf);
    Kff_.setFromTriplets(tff.begin(), tff.end());
    Kfd_.resize(nf, nd);
    Kfd_.setFromTriplets(tfd.begin(), tfd.end());
    Kff_.makeCompressed();
    lu_.compute(Kff_);
    if (lu_.info() != Eigen::Success)
      throw std::runtime_error("FormsSolver: factorization failed on region [" +
                               std::to_string(forms.region.clo[0]) + "," +
                               std::to_string(forms.region.chi[0]) + "]x[" +
                               std::to_string(forms.region.clo[1]) + "," +
                               std::to_string(forms.region.chi[1]) + "]");
  }

  /// Solve K x = load on the free DOFs; result zero on Dirichlet DOFs.
  VecC solve(const VecC& load_full, SolveDiagnostics* diag = nullptr) const
  {
    const auto& f = *forms_;
    VecC b(f.num_free());
    for (int i = 0; i < f.num_free(); ++i) b[i] = load_full[f.free_list[i]];
    VecC xf = lu_.solve(b);
    if (diag) {
      const double bn = b.norm();
      diag->relative_residual = bn > 0 ? (Kff_ * xf - b).norm() / bn : 0.0;
      diag->residual_warning = diag->relative_residual > 1e-10;
    }
    VecC x = VecC::Zero(f.region.num_local_vertices());
    for (int i = 0; i < f.num_free(); ++i) x[f.free_list[i]] = xf[i];
    return x;
  }

  /// Solve restricted to free DOFs only (caller scatters).
  VecC solve_free(const VecC& b_free) const { return lu_.solve(b_free); }

  /** Helmholtz-harmonic extension of Dirichlet data.

      Input: full local vector whose values on the Dirichlet DOFs are the
      prescribed trace. Output: full vector y with that exact trace and
      a_omega(v, y) = 0 for all v vanishing on the Dirichlet DOFs. Since K is
      complex symmetric this amounts to y_f = conj(K_ff^{-1}(-K_fd conj(t))).
  */
  VecC harmonic_extension(const VecC& trace_full) const
  {
    const auto& f = *forms_;
    const int nd = static_cast<int>(f.dirichlet.size());
    VecC t(nd);
    for (int k = 0; k < nd; ++k) t[k] = std::conj(trace_full[f.dirichlet[k]]);
    VecC yf = lu_.solve((-(Kfd_ * t)).eval());
    VecC y = VecC::Zero(f.region.num_local_vertices());
    for (int i = 0; i < f.num_free(); ++i) y[f.free_list[i]] = std::conj(yf[i]);
    for (int k = 0; k < nd; ++k) y[f.dirichlet[k]] = trace_full[f.dirichlet[k]];
    return y;
  }

  const AssembledForms& forms() const { return *forms_; }
  const SpMatC& Kff() const { return Kff_; }

 private:
  const AssembledForms* forms_;
  SpMatC Kff_, Kfd_;
  Eigen::SparseLU<SpMatC> lu_;
};

struct NormReport {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double v = 0.0;    ///< ( |grad|^2 + kappa^2 |.|^2 )^{1/2}
  double v_a = 0.0;  ///< A-weighted variant
};

inline NormReport norms(const VecC& v_full, const AssembledForms& forms)
{
  NormReport r;
  const double k2 = forms.spec.kappa * forms.spec.kappa;
  const double l2sq = std::real(v_full.dot(forms.M * v_full));
  const double h1sq = std::real(v_full.dot(forms.S1 * v_full));
  const double hasq = std::real(v_full.dot(forms.S * v_full));
  r.l2 = std::sqrt(std::max(0.0, l2sq));
  r.h1_semi = std::sqrt(std::max(0.0, h1sq));
  r.v = std::sqrt(std::max(0.0, h1sq + k2 * l2sq));
  r.v_a = std::sqrt(std::max(0.0, hasq + k2 * l2sq));
  return r;
}

/// Energy norm |||v|||_omega used for harmonic-space orthonormalization.
inline double energy_norm(const VecC& v_full, const AssembledForms& forms)
{
  return norms(v_full, forms).v;
}

/// Norm matrices restricted to fine cells whose centers lie in a sub-box.
struct RestrictedNorms {
  SpMatR S1, S, M;
  double kappa = 0.0;

  NormReport eval(const VecC& v_full) const
  {
    NormReport r;
    const double k2 = kappa * kappa;
    const double l2sq = std::real(v_full.dot(M * v_full));
    const double h1sq = std::real(v_full.dot(S1 * v_full));
    const double hasq = std::real(v_full.dot(S * v_full));
    r.l2 = std::sqrt(std::max(0.0, l2sq));
    r.h1_semi = std::sqrt(std::max(0.0, h1sq));
    r.v = std::sqrt(std::max(0.0, h1sq + k2 * l2sq));
    r.v_a = std::sqrt(std::max(0.0, hasq + k2 * l2sq));
    return r;
  }
};

inline RestrictedNorms restricted_norm_matrices(const Region& region, const ProblemSpec& spec,
                                                const Box2& box)
{
  RestrictedNorms rn;
  rn.kappa = spec.kappa;
  const int n = region.num_local_vertices();
  std::vector<Eigen::Triplet<double>> tS1, tS, tM;
  const FineGrid& g = region.fine;
  double K1[2][2], M1[2][2];
  detail::element_matrices_1d(g.h, K1, M1);
  const int cy_end = region.dim() == 1 ? 1 : region.vhi[1];
  const int cy_beg = region.dim() == 1 ? 0 : region.vlo[1];
  for (int cy = cy_beg; cy < std::max(cy_end, cy_beg + 1); ++cy) {
    for (int cx = region.vlo[0]; cx < region.vhi[0]; ++cx) {
      const double xc = (cx + 0.5) * g.h;
      const double yc = region.dim() == 1 ? 0.5 : (cy + 0.5) * g.h;
      if (!box.contains(xc, region.dim() == 1 ? 0.5 * (box.ymin + box.ymax) : yc)) continue;
      const double A = spec.coefficient.value_at(xc, region.dim() == 1 ? 0.0 : yc);
      if (region.dim() == 1) {
        int v[2] = {region.local_vertex_id({cx, 0}), region.local_vertex_id({cx + 1, 0})};
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) {
            tS1.emplace_back(v[a], v[b], K1[a][b]);
            tS.emplace_back(v[a], v[b], A * K1[a][b]);
            tM.emplace_back(v[a], v[b], M1[a][b]);
          }
      } else {
        int v[4] = {region.local_vertex_id({cx, cy}), region.local_vertex_id({cx + 1, cy}),
                    region.local_vertex_id({cx, cy + 1}), region.local_vertex_id({cx + 1, cy + 1})};
        for (int a = 0; a < 4; ++a) {
          const int axi = a % 2, ayi = a / 2;
          for (int b = 0; b < 4; ++b) {
            const int bxi = b % 2, byi = b / 2;
            const double s1 = K1[axi][bxi] * M1[ayi][byi] + M1[axi][bxi] * K1[ayi][byi];
            tS1.emplace_back(v[a], v[b], s1);
            tS.emplace_back(v[a], v[b], A * s1);
            tM.emplace_back(v[a], v[b], M1[axi][bxi] * M1[ayi][byi]);
          }
        }
      }
    }
  }
  rn.S1.resize(n, n);
  rn.S1.setFromTriplets(tS1.begin(), tS1.end());
  rn.S.resize(n, n);
  rn.S.setFromTriplets(tS.begin(), tS.end());
  rn.M.resize(n, n);
  rn.M.setFromTriplets(tM.begin(), tM.end());
  return rn;
}

}  // namespace slod
