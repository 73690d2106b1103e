#pragma once

/** @file grid.hpp
    @brief Cartesian coarse mesh, element patches and the global fine grid.

    The domain is the unit interval/square. The coarse mesh partitions it into
    n_per_dim^d congruent cells of side H = 1/n_per_dim; the fine grid is a
    compatible Q1 grid used for all patch and reference computations. Regions
    (unions of coarse cells, always axis-aligned boxes on Cartesian meshes)
    carry the index maps between local and global fine degrees of freedom.
*/

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace slod {

/// Coarse Cartesian partition T_H of the unit cube, elements in lexicographic order.
struct CoarseMesh {
  int dim = 2;        ///< spatial dimension, 1 or 2
  int n_per_dim = 2;  ///< subdivisions per axis
  double H = 0.5;     ///< mesh size 1/n_per_dim

  int num_elements() const
  {
    return dim == 1 ? n_per_dim : n_per_dim * n_per_dim;
  }

  std::array<int, 2> multi_index(int id) const
  {
    if (dim == 1) return {id, 0};
    return {id % n_per_dim, id / n_per_dim};
  }

  int element_id(std::array<int, 2> mi) const
  {
    return dim == 1 ? mi[0] : mi[0] + n_per_dim * mi[1];
  }
};

inline CoarseMesh build_cartesian_mesh(int dim, int n_per_dim)
{
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("build_cartesian_mesh: unsupported dimension " + std::to_string(dim));
  if (n_per_dim < 2)
    throw std::invalid_argument("build_cartesian_mesh: n_per_dim must be >= 2");
  CoarseMesh mesh;
  mesh.dim = dim;
  mesh.n_per_dim = n_per_dim;
  mesh.H = 1.0 / n_per_dim;
  return mesh;
}

/// Element patch N^l(T): coarse elements within Chebyshev distance l, clipped to the domain.
struct PatchIndexSet {
  int center = 0;              ///< element id T
  int order = 1;               ///< oversampling parameter l
  std::array<int, 2> lo{};     ///< inclusive coarse-index box, lower corner
  std::array<int, 2> hi{};     ///< inclusive coarse-index box, upper corner
  std::vector<int> elements;   ///< sorted coarse element ids in N^l(T)
  bool touches_boundary = false;  ///< patch boundary meets the domain boundary
  bool equals_domain = false;     ///< patch covers all of Omega (Gamma empty)
};

/// N^1 adjacency is by closure intersection, so N^l(T) is the (2l+1)^d
/// Chebyshev ball around T's multi-index, clipped to the domain.
inline PatchIndexSet element_patch(const CoarseMesh& mesh, int T, int ell)
{
  if (ell < 1) throw std::invalid_argument("element_patch: order must be >= 1");
  if (T < 0 || T >= mesh.num_elements())
    throw std::invalid_argument("element_patch: invalid element id");

  const auto mi = mesh.multi_index(T);
  PatchIndexSet p;
  p.center = T;
  p.order = ell;
  const int dims = mesh.dim;
  for (int a = 0; a < 2; ++a) {
    if (a < dims) {
      p.lo[a] = std::max(0, mi[a] - ell);
      p.hi[a] = std::min(mesh.n_per_dim - 1, mi[a] + ell);
    } else {
      p.lo[a] = p.hi[a] = 0;
    }
  }
  for (int j = p.lo[1]; j <= p.hi[1]; ++j)
    for (int i = p.lo[0]; i <= p.hi[0]; ++i)
      p.elements.push_back(mesh.element_id({i, j}));
  std::sort(p.elements.begin(), p.elements.end());

  p.equals_domain = true;
  p.touches_boundary = false;
  for (int a = 0; a < dims; ++a) {
    if (p.lo[a] > 0 || p.hi[a] < mesh.n_per_dim - 1) p.equals_domain = false;
    if (p.lo[a] == 0 || p.hi[a] == mesh.n_per_dim - 1) p.touches_boundary = true;
  }
  return p;
}

/// Global fine Q1 grid, compatible with the coarse mesh (n_fine divisible by n_per_dim).
struct FineGrid {
  int dim = 2;
  int n_fine = 4;    ///< fine subdivisions per axis
  int n_coarse = 2;  ///< coarse subdivisions per axis
  int ratio = 2;     ///< n_fine / n_coarse
  double h = 0.25;   ///< fine mesh size

  int verts_per_dim() const { return n_fine + 1; }
  int num_vertices() const
  {
    return dim == 1 ? n_fine + 1 : (n_fine + 1) * (n_fine + 1);
  }
  int num_cells() const { return dim == 1 ? n_fine : n_fine * n_fine; }

  int vertex_id(std::array<int, 2> vi) const
  {
    return dim == 1 ? vi[0] : vi[0] + (n_fine + 1) * vi[1];
  }
  std::array<int, 2> vertex_index(int id) const
  {
    if (dim == 1) return {id, 0};
    return {id % (n_fine + 1), id / (n_fine + 1)};
  }
  std::array<double, 2> vertex_coord(std::array<int, 2> vi) const
  {
    return {vi[0] * h, vi[1] * h};
  }
};

inline FineGrid build_fine_grid(const CoarseMesh& mesh, int n_fine)
{
  if (n_fine < mesh.n_per_dim || n_fine % mesh.n_per_dim != 0)
    throw std::invalid_argument("build_fine_grid: n_fine must be a multiple of n_per_dim");
  FineGrid g;
  g.dim = mesh.dim;
  g.n_fine = n_fine;
  g.n_coarse = mesh.n_per_dim;
  g.ratio = n_fine / mesh.n_per_dim;
  g.h = 1.0 / n_fine;
  return g;
}

/** Restriction of the fine grid to a union of coarse elements (a coarse-index box).

    Local fine vertices are numbered lexicographically inside the box. Boundary
    vertices are classified into the artificial part Gamma = d(omega) \ d(Omega)
    (Dirichlet in all patch problems) and the d(Omega) part (impedance or global
    Dirichlet, depending on the problem). A corner vertex shared by both parts
    belongs to Gamma.
*/
struct Region {
  FineGrid fine;
  std::array<int, 2> clo{}, chi{};  ///< inclusive coarse-element box
  std::array<int, 2> vlo{}, vhi{};  ///< inclusive fine-vertex box
  std::vector<int> gamma_vertices;        ///< local ids on Gamma, sorted
  std::vector<int> domain_boundary_vertices;  ///< local ids on d(Omega) \ Gamma, sorted

  int dim() const { return fine.dim; }
  int nvx() const { return vhi[0] - vlo[0] + 1; }
  int nvy() const { return dim() == 1 ? 1 : vhi[1] - vlo[1] + 1; }
  int num_local_vertices() const { return nvx() * nvy(); }
  int num_coarse_elements() const
  {
    int m = chi[0] - clo[0] + 1;
    if (dim() == 2) m *= chi[1] - clo[1] + 1;
    return m;
  }
  int cells_x() const { return vhi[0] - vlo[0]; }
  int cells_y() const { return dim() == 1 ? 1 : vhi[1] - vlo[1]; }

  int local_vertex_id(std::array<int, 2> vi) const
  {
    return (vi[0] - vlo[0]) + nvx() * (dim() == 1 ? 0 : vi[1] - vlo[1]);
  }
  std::array<int, 2> local_vertex_index(int lid) const
  {
    return {vlo[0] + lid % nvx(), dim() == 1 ? 0 : vlo[1] + lid / nvx()};
  }
  int global_vertex_id(int lid) const { return fine.vertex_id(local_vertex_index(lid)); }
  std::array<double, 2> local_vertex_coord(int lid) const
  {
    return fine.vertex_coord(local_vertex_index(lid));
  }

  /// Global coarse element ids covered by the region, in local (lexicographic) order.
  std::vector<int> coarse_element_ids(const CoarseMesh& mesh) const
  {
    std::vector<int> ids;
    ids.reserve(num_coarse_elements());
    for (int j = clo[1]; j <= chi[1]; ++j)
      for (int i = clo[0]; i <= chi[0]; ++i) ids.push_back(mesh.element_id({i, j}));
    return ids;
  }
};

inline Region restrict_region(const FineGrid& fine, const PatchIndexSet& patch)
{
  Region r;
  r.fine = fine;
  r.clo = patch.lo;
  r.chi = patch.hi;
  const int rat = fine.ratio;
  r.vlo = {patch.lo[0] * rat, fine.dim == 1 ? 0 : patch.lo[1] * rat};
  r.vhi = {(patch.hi[0] + 1) * rat, fine.dim == 1 ? 0 : (patch.hi[1] + 1) * rat};

  const int dims = fine.dim;
  for (int lid = 0; lid < r.num_local_vertices(); ++lid) {
    const auto vi = r.local_vertex_index(lid);
    bool on_gamma = false, on_domain_bdry = false;
    for (int a = 0; a < dims; ++a) {
      if (vi[a] == r.vlo[a]) {
        if (r.clo[a] > 0) on_gamma = true;
        else on_domain_bdry = true;
      }
      if (vi[a] == r.vhi[a]) {
        if (r.chi[a] < fine.n_coarse - 1) on_gamma = true;
        else on_domain_bdry = true;
      }
    }
    if (on_gamma) r.gamma_vertices.push_back(lid);
    else if (on_domain_bdry) r.domain_boundary_vertices.push_back(lid);
  }
  return r;
}

/// Region covering the whole domain (Gamma empty).
inline Region whole_domain_region(const FineGrid& fine)
{
  PatchIndexSet p;
  p.lo = {0, 0};
  p.hi = {fine.n_coarse - 1, fine.dim == 1 ? 0 : fine.n_coarse - 1};
  p.equals_domain = true;
  p.touches_boundary = true;
  return restrict_region(fine, p);
}

}  // namespace slod
