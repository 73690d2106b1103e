#include <catch2/catch_amalgamated.hpp>

#include "slod/grid.hpp"

using namespace slod;

TEST_CASE("cartesian mesh construction", "[grid]")
{
  auto m = build_cartesian_mesh(2, 4);
  CHECK(m.num_elements() == 16);
  CHECK(m.H == Catch::Approx(0.25));

  auto m1 = build_cartesian_mesh(1, 8);
  CHECK(m1.num_elements() == 8);
  CHECK(m1.H == Catch::Approx(0.125));

  CHECK_THROWS_AS(build_cartesian_mesh(3, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_cartesian_mesh(2, 1), std::invalid_argument);

  // id <-> multi-index bijection
  for (int id = 0; id < m.num_elements(); ++id) CHECK(m.element_id(m.multi_index(id)) == id);
}

TEST_CASE("element patches on an 8x8 mesh", "[grid]")
{
  auto m = build_cartesian_mesh(2, 8);
  const int interior = m.element_id({3, 3});
  auto p1 = element_patch(m, interior, 1);
  CHECK(p1.elements.size() == 9);
  CHECK_FALSE(p1.touches_boundary);
  CHECK(std::find(p1.elements.begin(), p1.elements.end(), interior) != p1.elements.end());

  auto corner = element_patch(m, m.element_id({0, 0}), 1);
  CHECK(corner.elements.size() == 4);
  CHECK(corner.touches_boundary);

  CHECK(element_patch(m, interior, 2).elements.size() == 25);
  auto all = element_patch(m, interior, 7);
  CHECK(all.elements.size() == 64);
  CHECK(all.equals_domain);
}

TEST_CASE("patch nestedness, symmetry and finite overlap", "[grid]")
{
  for (int n : {4, 8, 16}) {
    auto m = build_cartesian_mesh(2, n);
    for (int T = 0; T < m.num_elements(); ++T) {
      for (int ell = 1; ell + 1 <= n; ++ell) {
        auto a = element_patch(m, T, ell);
        auto b = element_patch(m, T, ell + 1);
        CHECK(std::includes(b.elements.begin(), b.elements.end(), a.elements.begin(),
                            a.elements.end()));
      }
    }
  }

  // mirror symmetry in x
  auto m = build_cartesian_mesh(2, 8);
  auto mirror = [&](int id) {
    auto mi = m.multi_index(id);
    return m.element_id({m.n_per_dim - 1 - mi[0], mi[1]});
  };
  for (int T = 0; T < m.num_elements(); ++T) {
    auto p = element_patch(m, T, 2);
    auto q = element_patch(m, mirror(T), 2);
    std::vector<int> mirrored;
    for (int e : p.elements) mirrored.push_back(mirror(e));
    std::sort(mirrored.begin(), mirrored.end());
    CHECK(mirrored == q.elements);
  }

  // each element lies in at most (2l+1)^2 patches of order l
  for (int ell : {1, 2}) {
    std::vector<int> counts(m.num_elements(), 0);
    for (int T = 0; T < m.num_elements(); ++T)
      for (int e : element_patch(m, T, ell).elements) ++counts[e];
    for (int c : counts) CHECK(c <= (2 * ell + 1) * (2 * ell + 1));
  }
}

TEST_CASE("region restriction and boundary classification", "[grid]")
{
  auto m = build_cartesian_mesh(2, 8);
  auto fine = build_fine_grid(m, 32);

  SECTION("whole domain has empty Gamma")
  {
    auto r = whole_domain_region(fine);
    CHECK(r.gamma_vertices.empty());
    CHECK(static_cast<int>(r.domain_boundary_vertices.size()) == 4 * fine.n_fine);
    CHECK(r.num_local_vertices() == fine.num_vertices());
  }

  SECTION("interior 3x3 patch")
  {
    auto p = element_patch(m, m.element_id({3, 3}), 1);
    auto r = restrict_region(fine, p);
    const int side = 3 * fine.ratio + 1;
    CHECK(r.num_local_vertices() == side * side);
    CHECK(r.domain_boundary_vertices.empty());
    CHECK(static_cast<int>(r.gamma_vertices.size()) == 4 * (side - 1));
    // restriction then extension-by-zero is the identity on interior DOFs
    for (int lid = 0; lid < r.num_local_vertices(); ++lid) {
      const int gid = r.global_vertex_id(lid);
      CHECK(r.local_vertex_id(fine.vertex_index(gid)) == lid);
    }
  }

  SECTION("boundary patch: Dirichlet wins at Gamma corners")
  {
    auto p = element_patch(m, m.element_id({0, 3}), 1);
    auto r = restrict_region(fine, p);
    // vertex at x=0 on the top artificial face belongs to Gamma
    const int top = r.vhi[1];
    const int lid = r.local_vertex_id({0, top});
    CHECK(std::find(r.gamma_vertices.begin(), r.gamma_vertices.end(), lid) !=
          r.gamma_vertices.end());
    CHECK(std::find(r.domain_boundary_vertices.begin(), r.domain_boundary_vertices.end(), lid) ==
          r.domain_boundary_vertices.end());
  }

  SECTION("1D interior patch has two Gamma endpoints")
  {
    auto m1 = build_cartesian_mesh(1, 8);
    auto f1 = build_fine_grid(m1, 64);
    for (int ell : {1, 2}) {
      auto p = element_patch(m1, 4, ell);
      auto r = restrict_region(f1, p);
      CHECK(r.gamma_vertices.size() == 2);
    }
  }

  SECTION("incompatible fine grid is rejected")
  {
    CHECK_THROWS_AS(build_fine_grid(m, 36), std::invalid_argument);
  }
}
