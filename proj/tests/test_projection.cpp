#include <catch2/catch_amalgamated.hpp>

#include "slod/fem.hpp"
#include "slod/harmonic.hpp"
#include "slod/projection.hpp"

using namespace slod;

namespace {

VecC interpolate(const FineGrid& g, const std::function<cplx(double, double)>& f)
{
  VecC v(g.num_vertices());
  for (int id = 0; id < g.num_vertices(); ++id) {
    const auto c = g.vertex_coord(g.vertex_index(id));
    v[id] = f(c[0], c[1]);
  }
  return v;
}

}  // namespace

TEST_CASE("projection of simple fields", "[projection]")
{
  auto mesh = build_cartesian_mesh(2, 2);
  auto fine = build_fine_grid(mesh, 16);
  auto region = whole_domain_region(fine);

  SECTION("constants are reproduced")
  {
    const auto p = project(VecC::Constant(fine.num_vertices(), cplx(3.0, -1.0)), region);
    REQUIRE(p.values.size() == 4);
    for (int i = 0; i < 4; ++i) {
      CHECK(p.values[i].real() == Catch::Approx(3.0));
      CHECK(p.values[i].imag() == Catch::Approx(-1.0));
    }
  }

  SECTION("element means of a linear field")
  {
    const auto p = project(interpolate(fine, [](double x, double) { return x; }), region);
    // element (0,0) covers [0, 1/2]^2, mean of x is H/2 = 1/4
    CHECK(p.values[0].real() == Catch::Approx(0.25));
    CHECK(p.values[1].real() == Catch::Approx(0.75));
  }

  SECTION("linearity")
  {
    const VecC a = interpolate(fine, [](double x, double y) { return cplx(x, y * y); });
    const VecC b = interpolate(fine, [](double x, double y) { return cplx(std::sin(x), y); });
    const auto pa = project(a, region);
    const auto pb = project(b, region);
    const auto pc = project((2.0 * a + cplx(0, 1) * b).eval(), region);
    CHECK((pc.values - 2.0 * pa.values - cplx(0, 1) * pb.values).norm() < 1e-14);
  }
}

TEST_CASE("projection restricted to a patch matches the global one", "[projection]")
{
  auto mesh = build_cartesian_mesh(2, 8);
  auto fine = build_fine_grid(mesh, 64);
  auto domain = whole_domain_region(fine);
  const VecC v = interpolate(fine, [](double x, double y) { return cplx(std::sin(3 * x + y), x * y); });
  const auto p_global = project(v, domain);

  auto region = restrict_region(fine, element_patch(mesh, mesh.element_id({3, 3}), 1));
  VecC v_local(region.num_local_vertices());
  for (int lid = 0; lid < region.num_local_vertices(); ++lid)
    v_local[lid] = v[region.global_vertex_id(lid)];
  const auto p_local = project(v_local, region);

  const auto ids = region.coarse_element_ids(mesh);
  REQUIRE(static_cast<int>(ids.size()) == p_local.values.size());
  for (std::size_t k = 0; k < ids.size(); ++k)
    CHECK(std::abs(p_local.values[static_cast<int>(k)] - p_global.values[ids[k]]) < 1e-14);
}

TEST_CASE("projection error bound and stability", "[projection]")
{
  auto mesh = build_cartesian_mesh(2, 8);
  auto fine = build_fine_grid(mesh, 64);
  auto region = whole_domain_region(fine);
  ProblemSpec spec;
  spec.kappa = 1.0;
  auto forms = assemble_forms(region, spec);
  const double H = mesh.H;
  const double H2 = H * H;

  const VecC v = interpolate(fine, [](double x, double y) {
    return cplx(std::sin(M_PI * x) * std::sin(M_PI * y), std::cos(2 * x + y));
  });
  const auto p = project(v, region);

  // orthogonality: || v - Pi v ||^2 = ||v||^2 - sum_K |mean_K|^2 H^2
  const double l2sq = std::real(v.dot(forms.M * v));
  const double proj_sq = p.values.squaredNorm() * H2;
  const double err = std::sqrt(std::max(0.0, l2sq - proj_sq));

  SECTION("stability: the projection contracts in L2")
  {
    CHECK(proj_sq <= l2sq * (1 + 1e-13));
  }

  SECTION("per-element mean-zero bound with constant H / pi")
  {
    const double grad = std::sqrt(std::real(v.dot(forms.S1 * v)));
    CHECK(err <= 1.02 * (H / M_PI) * grad);
  }
}

TEST_CASE("p0 load realizes the duality pairing", "[projection]")
{
  for (int dim : {1, 2}) {
    auto mesh = build_cartesian_mesh(dim, 4);
    auto fine = build_fine_grid(mesh, 32);
    auto region = whole_domain_region(fine);

    detail::SplitMix64 rng(99 + dim);
    P0Vector g;
    g.values.resize(region.num_coarse_elements());
    for (int i = 0; i < g.values.size(); ++i)
      g.values[i] = cplx(rng.uniform_sym(), rng.uniform_sym());
    VecC v(region.num_local_vertices());
    for (int i = 0; i < v.size(); ++i) v[i] = cplx(rng.uniform_sym(), rng.uniform_sym());

    // (g, v) = sum_K g_K conj(int_K v), realized as v^H load
    const VecC load = p0_load(g, region);
    const Eigen::VectorXcd ints = detail::coarse_element_integrals(v, region);
    const cplx direct = ints.dot(g.values);
    CHECK(std::abs(v.dot(load) - direct) < 1e-13 * (1.0 + std::abs(direct)));
  }
}
