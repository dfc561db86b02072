#include "dpm/fv_scheme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dpm {

void ModelParams::validate() const {
  if (!(chi > 0.0)) throw std::invalid_argument("ModelParams: chi must be positive");
  if (alpha != 1.0 || gamma_c != 1.0 || gamma_rho != 1.0)
    throw std::invalid_argument("ModelParams: alpha, gamma_c, gamma_rho are fixed to 1");
}

double minmod(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("minmod: needs at least one argument");
  const bool all_pos = std::all_of(xs.begin(), xs.end(), [](double x) { return x > 0.0; });
  if (all_pos) return *std::min_element(xs.begin(), xs.end());
  const bool all_neg = std::all_of(xs.begin(), xs.end(), [](double x) { return x < 0.0; });
  if (all_neg) return *std::max_element(xs.begin(), xs.end());
  return 0.0;
}

double minmod(std::initializer_list<double> xs) {
  return minmod(std::span<const double>(xs.begin(), xs.size()));
}

namespace {

inline double minmod3(double a, double b, double c) {
  if (a > 0.0 && b > 0.0 && c > 0.0) return std::min({a, b, c});
  if (a < 0.0 && b < 0.0 && c < 0.0) return std::max({a, b, c});
  return 0.0;
}

}  // namespace

FaceReconstruction limited_slopes(const GridField& rho, const GridSpec& grid,
                                  const PointClassification& pc) {
  if (!rho.matches(grid)) throw std::invalid_argument("limited_slopes: field/grid mismatch");
  FaceReconstruction fr;
  fr.h = grid.h;
  fr.mean = &rho;
  for (auto& s : fr.slope) s = GridField(grid);
  const double h = grid.h;
  for (Index i : pc.n_plus) {
    for (int axis = 0; axis < 3; ++axis) {
      const auto st = grid.axis_step(axis);
      const Index ip = i + st, im = i - st;
      if (!pc.has(ip, kNPlus) || !pc.has(im, kNPlus)) continue;
      const double dp = rho[ip] - rho[i];
      const double dm = rho[i] - rho[im];
      fr.slope[axis][i] = minmod3(2.0 * dp / h, (rho[ip] - rho[im]) / (2.0 * h), 2.0 * dm / h);
    }
  }
  return fr;
}

GridField convection_term(const GridField& rho, const GridField& c, const ModelParams& params,
                          const GridSpec& grid, const PointClassification& pc) {
  if (!rho.matches(grid) || !c.matches(grid))
    throw std::invalid_argument("convection_term: field/grid mismatch");
  const FaceReconstruction fr = limited_slopes(rho, grid, pc);
  GridField g(grid);
  const double inv_h = 1.0 / grid.h;
  for (Index i : pc.m_plus) {
    double div = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
      const auto st = grid.axis_step(axis);
      const Index ip = i + st, im = i - st;
      // +face between i and ip
      const double gp = (c[ip] - c[i]) * inv_h;
      const double rp = gp > 0.0 ? fr.face(i, axis, true) : fr.face(ip, axis, false);
      // -face between im and i; "inside" is the cell the gradient points away from
      const double gm = (c[i] - c[im]) * inv_h;
      const double rm = gm > 0.0 ? fr.face(im, axis, true) : fr.face(i, axis, false);
      div += (rp * gp - rm * gm) * inv_h;
    }
    g[i] = params.chi * div;
  }
  return g;
}

std::pair<GridField, GridField> assemble_rhs(const GridField& rho, const GridField& c,
                                             const GridField& g, double dt,
                                             const ModelParams& /*params*/, const GridSpec& grid,
                                             const PointClassification& pc) {
  if (!(dt > 0.0)) throw std::invalid_argument("assemble_rhs: dt must be positive");
  GridField f_rho(grid), f_c(grid);
  for (Index i : pc.m_plus) {
    f_rho[i] = rho[i] - dt * g[i];
    f_c[i] = (1.0 - dt) * c[i] + dt * rho[i];
  }
  return {std::move(f_rho), std::move(f_c)};
}

double cfl_dt(const GridField& c, const ModelParams& params, const GridSpec& grid,
              const PointClassification& pc) {
  std::array<double, 3> gmax{0.0, 0.0, 0.0};
  const double inv_h = 1.0 / grid.h;
  for (Index i : pc.m_plus) {
    for (int axis = 0; axis < 3; ++axis) {
      const auto st = grid.axis_step(axis);
      const double gp = std::abs(c[i + st] - c[i]) * inv_h;
      const double gm = std::abs(c[i] - c[i - st]) * inv_h;
      gmax[axis] = std::max({gmax[axis], gp, gm});
    }
  }
  double dt = std::numeric_limits<double>::infinity();
  for (double gm : gmax)
    if (gm > 0.0) dt = std::min(dt, grid.h / (6.0 * params.chi * gm));
  return dt;
}

}  // namespace dpm
