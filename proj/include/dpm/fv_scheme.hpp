#pragma once

#include <array>
#include <initializer_list>
#include <span>
#include <utility>

#include "dpm/geometry.hpp"
#include "dpm/grid.hpp"

namespace dpm {

/// Model constants. Only chi is free; the coupling constants are fixed to 1.
struct ModelParams {
  double chi = 1.0;
  double alpha = 1.0;
  double gamma_c = 1.0;
  double gamma_rho = 1.0;

  /// Throws std::invalid_argument unless chi > 0 and the fixed constants equal 1.
  void validate() const;
};

/// min if all arguments are positive, max if all are negative, 0 otherwise.
double minmod(std::span<const double> xs);
double minmod(std::initializer_list<double> xs);

/// Piecewise-linear reconstruction of cell averages with minmod-limited slopes.
/// Slopes are stored on N+ (M+ and gamma_ex); elsewhere they are zero.
struct FaceReconstruction {
  double h = 0.0;
  std::array<GridField, 3> slope;
  const GridField* mean = nullptr;

  /// One-sided face value of cell `i` on the +side (true) or -side (false) of `axis`.
  double face(Index i, int axis, bool plus) const {
    const double s = slope[axis][i];
    return (*mean)[i] + (plus ? 0.5 : -0.5) * h * s;
  }
};

/// Limited slopes on every N+ point. An axis whose two neighbours are not both
/// in N+ gets slope 0 (the point is then reconstructed as a constant along it).
/// The returned object references `rho`, which must outlive it.
FaceReconstruction limited_slopes(const GridField& rho, const GridSpec& grid,
                                  const PointClassification& pc);

/// chi * div(rho grad c) on M+ with upwinded face densities; zero off M+.
GridField convection_term(const GridField& rho, const GridField& c, const ModelParams& params,
                          const GridSpec& grid, const PointClassification& pc);

/// IMEX right-hand sides on M+: f_rho = rho - dt*g, f_c = (1 - dt) c + dt rho.
std::pair<GridField, GridField> assemble_rhs(const GridField& rho, const GridField& c,
                                             const GridField& g, double dt,
                                             const ModelParams& params, const GridSpec& grid,
                                             const PointClassification& pc);

/// Positivity time-step bound min_axis h / (6 chi max|grad c|) over faces of M+
/// cells; +infinity when every face gradient vanishes.
double cfl_dt(const GridField& c, const ModelParams& params, const GridSpec& grid,
              const PointClassification& pc);

}  // namespace dpm
