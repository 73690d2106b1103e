#pragma once

/** @file projection.hpp
    @brief Piecewise-constant L2 projection between fine functions and coarse elements.

    Integrals of Q1 functions over coarse elements are exact: per fine cell the
    trapezoidal corner average integrates multilinear functions exactly.
*/

#include <Eigen/Dense>

#include "grid.hpp"
#include "problem.hpp"

namespace slod {

/// One complex value per coarse element of a region, in the region's local order.
struct P0Vector {
  Eigen::VectorXcd values;
};

namespace detail {

/// Exact integrals of the Q1 interpolant v over every coarse element of the region.
inline Eigen::VectorXcd coarse_element_integrals(const Eigen::VectorXcd& v_full, const Region& region)
{
  const FineGrid& g = region.fine;
  const int rat = g.ratio;
  const double cellw = g.dim == 1 ? g.h / 2.0 : g.h * g.h / 4.0;  // weight per corner
  const int mx = region.chi[0] - region.clo[0] + 1;
  const int my = g.dim == 1 ? 1 : region.chi[1] - region.clo[1] + 1;
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(mx * my);
  for (int ej = 0; ej < my; ++ej) {
    for (int ei = 0; ei < mx; ++ei) {
      cplx sum = 0.0;
      const int cx0 = (region.clo[0] + ei) * rat;
      const int cy0 = g.dim == 1 ? 0 : (region.clo[1] + ej) * rat;
      const int cyn = g.dim == 1 ? 1 : rat;
      for (int cy = 0; cy < cyn; ++cy)
        for (int cx = 0; cx < rat; ++cx) {
          const int vx = cx0 + cx, vy = cy0 + cy;
          if (g.dim == 1) {
            sum += v_full[region.local_vertex_id({vx, 0})] + v_full[region.local_vertex_id({vx + 1, 0})];
          } else {
            sum += v_full[region.local_vertex_id({vx, vy})] +
                   v_full[region.local_vertex_id({vx + 1, vy})] +
                   v_full[region.local_vertex_id({vx, vy + 1})] +
                   v_full[region.local_vertex_id({vx + 1, vy + 1})];
          }
        }
      out[ei + mx * ej] = cellw * sum;
    }
  }
  return out;
}

}  // namespace detail

/// L2 projection onto P0(T_{H,omega}): per element, mean value of the Q1 interpolant.
inline P0Vector project(const Eigen::VectorXcd& v_full, const Region& region)
{
  const double Hd = region.dim() == 1 ? 1.0 / region.fine.n_coarse
                                      : 1.0 / (static_cast<double>(region.fine.n_coarse) *
                                               region.fine.n_coarse);
  P0Vector p;
  p.values = detail::coarse_element_integrals(v_full, region) / Hd;
  return p;
}

/// Load vector of (g, .)_omega for a P0 source g: entry i = sum_K g_K int_K psi_i.
inline Eigen::VectorXcd p0_load(const P0Vector& g, const Region& region)
{
  const FineGrid& gr = region.fine;
  const int rat = gr.ratio;
  const double cellw = gr.dim == 1 ? gr.h / 2.0 : gr.h * gr.h / 4.0;
  const int mx = region.chi[0] - region.clo[0] + 1;
  const int my = gr.dim == 1 ? 1 : region.chi[1] - region.clo[1] + 1;
  Eigen::VectorXcd load = Eigen::VectorXcd::Zero(region.num_local_vertices());
  for (int ej = 0; ej < my; ++ej) {
    for (int ei = 0; ei < mx; ++ei) {
      const cplx w = cellw * g.values[ei + mx * ej];
      const int cx0 = (region.clo[0] + ei) * rat;
      const int cy0 = gr.dim == 1 ? 0 : (region.clo[1] + ej) * rat;
      const int cyn = gr.dim == 1 ? 1 : rat;
      for (int cy = 0; cy < cyn; ++cy)
        for (int cx = 0; cx < rat; ++cx) {
          const int vx = cx0 + cx, vy = cy0 + cy;
          if (gr.dim == 1) {
            load[region.local_vertex_id({vx, 0})] += w;
            load[region.local_vertex_id({vx + 1, 0})] += w;
          } else {
            load[region.local_vertex_id({vx, vy})] += w;
            load[region.local_vertex_id({vx + 1, vy})] += w;
            load[region.local_vertex_id({vx, vy + 1})] += w;
            load[region.local_vertex_id({vx + 1, vy + 1})] += w;
          }
        }
    }
  }
  return load;
}

}  // namespace slod
