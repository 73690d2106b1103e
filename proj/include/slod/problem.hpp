#pragma once

/** @file problem.hpp
    @brief Problem description: wavenumber, coefficient field, boundary treatment, sources.
*/

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"

namespace slod {

using cplx = std::complex<double>;

/// Piecewise fine-cell-constant diffusion coefficient A > 0.
struct CoefficientField {
  enum class Kind { Homogeneous, PeriodicInclusions, Custom };
  Kind kind = Kind::Homogeneous;
  double eps = 1.0 / 16.0;  ///< inclusion period (inclusions of size eps/2, value eps^2)
  std::function<double(double, double)> custom;  ///< evaluated at fine-cell centers

  double value_at(double x, double y) const
  {
    switch (kind) {
      case Kind::Homogeneous:
        return 1.0;
      case Kind::PeriodicInclusions: {
        // central square of side eps/2 inside each eps-period cell
        const double fx = x / eps - std::floor(x / eps);
        const double fy = y / eps - std::floor(y / eps);
        const bool inside = fx >= 0.25 && fx < 0.75 && fy >= 0.25 && fy < 0.75;
        return inside ? eps * eps : 1.0;
      }
      case Kind::Custom:
        return custom(x, y);
    }
    return 1.0;
  }

  bool is_homogeneous() const { return kind == Kind::Homogeneous; }

  static CoefficientField homogeneous() { return {}; }
  static CoefficientField periodic_inclusions(double eps)
  {
    CoefficientField c;
    c.kind = Kind::PeriodicInclusions;
    c.eps = eps;
    return c;
  }
};

enum class BoundaryCondition {
  Impedance,  ///< grad(u).n - i*kappa*u = 0 on d(Omega)
  Pml         ///< complex coordinate stretching layer, homogeneous Dirichlet on d(Omega)
};

/// Full problem description plus the resolution-condition diagnostics.
struct ProblemSpec {
  double kappa = 1.0;
  CoefficientField coefficient;
  BoundaryCondition bc = BoundaryCondition::Impedance;
  int pml_layer_cells = 4;  ///< PML layer width in coarse cells
  double friedrichs_constant = 1.0;  ///< C_F used in the patch resolution check

  /// H*kappa <= pi/sqrt(2)
  bool resolution_ok(double H) const { return H * kappa <= M_PI / std::sqrt(2.0); }
  /// H*kappa*l*C_F <= 1/sqrt(2)
  bool patch_resolution_ok(double H, int ell) const
  {
    return H * kappa * ell * friedrichs_constant <= 1.0 / std::sqrt(2.0);
  }
};

/// PML absorbing function in one direction; purely imaginary inside the layer,
/// zero in the physical domain. w is the layer width.
inline cplx pml_rho(double x, double kappa, double w)
{
  if (x > 0.0 && x <= w) return cplx(0.0, 1.0 / kappa) * (1.0 / (-x) + 1.0 / w);
  if (x >= 1.0 - w && x < 1.0) return cplx(0.0, 1.0 / kappa) * (1.0 / (1.0 - x) - 1.0 / w);
  return cplx(0.0, 0.0);
}

/// Named analytic right-hand sides, evaluated at fine vertices (Q1 interpolant).
struct SourceTerm {
  enum class Kind { Constant, SinCos, PointSource, Raw };
  Kind kind = Kind::Constant;
  double constant = 1.0;
  std::array<double, 2> center{0.5, 0.5};  ///< point-source location z
  double radius = 0.05;
  double amplitude = 1e4;
  std::vector<cplx> raw;  ///< used when kind == Raw (global fine vertex values)

  cplx evaluate(double x, double y, int dim) const
  {
    switch (kind) {
      case Kind::Constant:
        return constant;
      case Kind::SinCos:
        return dim == 1 ? std::sin(M_PI * x) : std::sin(M_PI * x) * std::cos(M_PI * y);
      case Kind::PointSource: {
        const double dx = x - center[0];
        const double dy = dim == 1 ? 0.0 : y - center[1];
        const double q = (dx * dx + dy * dy) / (radius * radius);
        if (q >= 1.0) return 0.0;
        return amplitude * std::exp(-1.0 / (1.0 - q));
      }
      case Kind::Raw:
        throw std::logic_error("SourceTerm: raw source has no pointwise rule");
    }
    return 0.0;
  }

  static SourceTerm constant_source(double c = 1.0)
  {
    SourceTerm s;
    s.kind = Kind::Constant;
    s.constant = c;
    return s;
  }
  static SourceTerm sin_cos()
  {
    SourceTerm s;
    s.kind = Kind::SinCos;
    return s;
  }
  static SourceTerm point_source(double zx, double zy, double r = 0.05, double amp = 1e4)
  {
    SourceTerm s;
    s.kind = Kind::PointSource;
    s.center = {zx, zy};
    s.radius = r;
    s.amplitude = amp;
    return s;
  }
};

}  // namespace slod
