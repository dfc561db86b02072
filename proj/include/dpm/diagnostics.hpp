#pragma once

#include <span>
#include <vector>

#include "dpm/geometry.hpp"
#include "dpm/grid.hpp"

namespace dpm {

/// One row of the run time series.
struct TimeSeriesRecord {
  long step = 0;
  double t = 0.0;
  double dt = 0.0;
  double max_rho = 0.0;
  double second_moment = 0.0;
  double free_energy = 0.0;
  double bep_residual = 0.0;
  double clamp = 0.0;
};

/// How a reference field on another grid is brought onto coarse M+ centers.
enum class Restriction {
  coincident,    // fine centers coincide with coarse centers
  cell_average,  // mean of the fine cells tiling each coarse cell
  trilinear,     // trilinear interpolation at coarse centers
  automatic,     // coincident, else cell_average when grids nest, else trilinear
};

/// True if every coarse cell is tiled exactly by fine cells.
bool grids_nest(const GridSpec& coarse, const GridSpec& fine);
/// True if every coarse center is also a fine center.
bool centers_coincide(const GridSpec& coarse, const GridSpec& fine);

/// Reference values at the coarse M+ centers (zero elsewhere). Fine values are
/// read on fine N+ only; cells touching points outside it fall back to trilinear
/// sampling from N+ values. Throws std::invalid_argument when `mode` is
/// incompatible with the two grids.
GridField restrict_reference(const GridSpec& coarse, const PointClassification& coarse_pc,
                             const GridSpec& fine, const PointClassification& fine_pc,
                             const GridField& fine_field, Restriction mode = Restriction::automatic);

/// max over M+ of |u_h - u_ref|, both on the same grid.
double error_inf(const GridField& u_h, const GridField& u_ref, const PointClassification& pc);

/// max over coarse M+ after restricting the reference.
double error_inf(const GridField& u_h, const GridSpec& grid, const PointClassification& pc,
                 const GridField& u_ref, const GridSpec& ref_grid,
                 const PointClassification& ref_pc, Restriction mode = Restriction::automatic);

/// Relative discrete L2-in-time error of two max-density series with equal dt.
double error_rel_timeseries(std::span<const double> series_h, std::span<const double> series_ref,
                            double dt);

/// max over M+ of |u - u_star| on one mesh.
double error_time(const GridField& u, const GridField& u_star, const PointClassification& pc);

/// max over M+. Throws std::invalid_argument on an empty mask.
double max_density(const GridField& rho, const PointClassification& pc);

/// sum over M+ of h^3 |x|^2 rho.
double second_moment(const GridField& rho, const GridSpec& grid, const PointClassification& pc);

/// sum over M+ of h^3 (rho ln rho - rho c + c^2/2 + sum_axes (c_+ - c_-)^2 / (8 h^2)),
/// with 0 ln 0 = 0. Throws std::invalid_argument on negative rho.
double free_energy(const GridField& rho, const GridField& c, const GridSpec& grid,
                   const PointClassification& pc);

/// sum over M+ of h^3 rho.
double total_mass(const GridField& rho, const GridSpec& grid, const PointClassification& pc);

/// True iff max_now - max_prev >= threshold.
bool blow_up_check(double max_now, double max_prev, double threshold = 1000.0);

/// Trilinear sample of a grid field at `p`, using only N+ values
/// (corners outside N+ are dropped and the weights renormalized).
double sample_trilinear(const GridField& u, const GridSpec& grid, const PointClassification& pc,
                        const Vec3& p);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Pairwise (fixed-tree) sum.
double pairwise_sum(std::span<const double> xs);

}  // namespace dpm
