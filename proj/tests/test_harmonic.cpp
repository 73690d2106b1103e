#include <catch2/catch_amalgamated.hpp>

#include "slod/harmonic.hpp"

using namespace slod;

namespace {

struct PatchSetup {
  Region region;
  AssembledForms forms;
  std::unique_ptr<FormsSolver> solver;
};

// heap-allocated so the solver's pointer into forms stays valid
std::unique_ptr<PatchSetup> make_patch(int dim, int n_coarse, int n_fine, int T, int ell,
                                       double kappa)
{
  auto mesh = build_cartesian_mesh(dim, n_coarse);
  auto fine = build_fine_grid(mesh, n_fine);
  auto s = std::make_unique<PatchSetup>();
  s->region = restrict_region(fine, element_patch(mesh, T, ell));
  ProblemSpec spec;
  spec.kappa = kappa;
  s->forms = assemble_forms(s->region, spec);
  s->solver = std::make_unique<FormsSolver>(s->forms);
  return s;
}

}  // namespace

TEST_CASE("per-patch seeds are stable and distinct", "[harmonic]")
{
  CHECK(patch_seed(7, 3, 2) == patch_seed(7, 3, 2));
  CHECK(patch_seed(7, 3, 2) != patch_seed(7, 4, 2));
  CHECK(patch_seed(7, 3, 2) != patch_seed(7, 3, 3));
  CHECK(patch_seed(7, 3, 2) != patch_seed(8, 3, 2));
}

TEST_CASE("sampling prescribes the exact random trace", "[harmonic]")
{
  auto s = make_patch(2, 8, 32, build_cartesian_mesh(2, 8).element_id({3, 3}), 1, 4.0);
  const std::uint64_t seed = 12345;
  const int count = 4;
  auto basis = sample_harmonic_space(*s->solver, seed, count);
  REQUIRE(basis.columns.cols() == count);

  detail::SplitMix64 rng(seed);
  for (int c = 0; c < count; ++c)
    for (int v : s->region.gamma_vertices) {
      const double re = rng.uniform_sym();
      const double im = rng.uniform_sym();
      CHECK(basis.columns(v, c) == cplx(re, im));
    }
}

TEST_CASE("samples are discretely Helmholtz-harmonic", "[harmonic]")
{
  auto s = make_patch(2, 8, 32, build_cartesian_mesh(2, 8).element_id({3, 3}), 1, 8.0);
  auto basis = sample_harmonic_space(*s->solver, 5, 6);
  const SpMatC Kc = s->forms.K.conjugate();
  for (int c = 0; c < basis.columns.cols(); ++c) {
    const VecC r = Kc * basis.columns.col(c);
    double free_res = 0.0;
    for (int i : s->forms.free_list) free_res += std::norm(r[i]);
    CHECK(std::sqrt(free_res) <= 1e-10 * (1.0 + r.norm()));
  }
}

TEST_CASE("sampling is deterministic", "[harmonic]")
{
  auto s = make_patch(2, 8, 32, build_cartesian_mesh(2, 8).element_id({2, 5}), 1, 4.0);
  auto a = sample_harmonic_space(*s->solver, 77, 5);
  auto b = sample_harmonic_space(*s->solver, 77, 5);
  CHECK((a.columns - b.columns).norm() == 0.0);
  auto c = sample_harmonic_space(*s->solver, 78, 5);
  CHECK((a.columns - c.columns).norm() > 0.0);
}

TEST_CASE("sampling the whole domain is rejected", "[harmonic]")
{
  auto mesh = build_cartesian_mesh(2, 4);
  auto fine = build_fine_grid(mesh, 16);
  ProblemSpec spec;
  spec.kappa = 2.0;
  auto forms = assemble_forms(whole_domain_region(fine), spec);
  FormsSolver solver(forms);
  CHECK_THROWS_AS(sample_harmonic_space(solver, 0, 4), std::runtime_error);
}

TEST_CASE("energy orthonormalization", "[harmonic]")
{
  auto s = make_patch(2, 8, 32, build_cartesian_mesh(2, 8).element_id({3, 3}), 1, 8.0);
  const int count = 5 * s->region.num_coarse_elements();
  auto raw = sample_harmonic_space(*s->solver, 2, count);
  auto ortho = orthonormalize_energy(raw, s->forms);

  SECTION("Gram identity")
  {
    const double k2 = s->forms.spec.kappa * s->forms.spec.kappa;
    const MatC E = s->forms.S1.cast<cplx>() * ortho.columns + k2 * (s->forms.M.cast<cplx>() * ortho.columns);
    const MatC G = ortho.columns.adjoint() * E;
    CHECK((G - MatC::Identity(ortho.rank, ortho.rank)).cwiseAbs().maxCoeff() < 1e-10);
  }

  SECTION("rank is bounded by trace and sample counts")
  {
    const int n_gamma = static_cast<int>(s->region.gamma_vertices.size());
    CHECK(ortho.rank <= std::min(count, n_gamma));
    CHECK(ortho.rank >= std::min(count, n_gamma) - 5);
  }

  SECTION("duplicated columns do not change the rank")
  {
    HarmonicBasis dup = raw;
    dup.columns.conservativeResize(Eigen::NoChange, 2 * raw.columns.cols());
    dup.columns.rightCols(raw.columns.cols()) = raw.columns;
    auto ortho2 = orthonormalize_energy(dup, s->forms);
    CHECK(ortho2.rank == ortho.rank);
  }

  SECTION("retained columns stay harmonic")
  {
    const SpMatC Kc = s->forms.K.conjugate();
    const VecC r = Kc * ortho.columns.col(0);
    double free_res = 0.0;
    for (int i : s->forms.free_list) free_res += std::norm(r[i]);
    CHECK(std::sqrt(free_res) <= 1e-8 * (1.0 + r.norm()));
  }
}

TEST_CASE("1D harmonic space has dimension two", "[harmonic]")
{
  auto s = make_patch(1, 8, 64, 4, 1, 2.0);
  REQUIRE(s->region.gamma_vertices.size() == 2);
  auto raw = sample_harmonic_space(*s->solver, 9, 15);
  auto ortho = orthonormalize_energy(raw, s->forms);
  CHECK(ortho.rank == 2);
}
