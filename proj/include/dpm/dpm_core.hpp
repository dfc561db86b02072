#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dpm/geometry.hpp"
#include "dpm/grid.hpp"
#include "dpm/poisson.hpp"

namespace dpm {

/// Values on the discrete grid boundary gamma, in canonical gamma order.
using BoundaryDensity = std::vector<double>;

/// q += L[v] on M-, where v is the gamma density extended by zero to all of N0.
void add_density_source(const GridSpec& grid, const PointClassification& pc,
                        std::span<const double> v_gamma, double dt, GridField& q);

/// Zeroes every value of `u` outside N+.
void restrict_to_n_plus(const PointClassification& pc, GridField& u);

/// AP solution with right-hand side f on M+ and 0 on M-, restricted to N+.
GridField particular_solution(const SolverPlan& plan, const GridSpec& grid, const GridField& f,
                              const PointClassification& pc);

/// AP solution with right-hand side 0 on M+ and L[v_gamma] on M-, restricted to N+.
GridField difference_potential(const SolverPlan& plan, const GridSpec& grid,
                               std::span<const double> v_gamma, const PointClassification& pc);

/// difference_potential(u_gamma) + particular_solution(f), computed with one AP solve.
GridField greens_formula(const SolverPlan& plan, const GridSpec& grid,
                         std::span<const double> u_gamma, const GridField& f,
                         const PointClassification& pc);

std::vector<double> trace(const GridField& u, std::span<const Index> points);

/// Legendre polynomial P_nu(x) by the three-term recurrence.
double legendre(int nu, double x);
/// P_0(x) .. P_M(x) into out[0..M].
void legendre_table(int max_degree, double x, double* out);
/// Zonal harmonic P_nu(cos theta).
double zonal_basis(int nu, double theta);

/// Per-point extension basis: term t gives (d^t / t!) * P_nu(cos theta).
BoundaryDensity extension_column(std::span<const SurfacePoint> geom, int nu, int term);

/// A boundary or interface carrying its own spectral Cauchy data.
/// Column (term index ti, degree nu) has local index ti * harmonics + nu.
struct SpectralPiece {
  std::string name;
  int harmonics = 1;         // M + 1
  std::vector<int> terms;    // subset of {0, 1, 2}
  std::size_t columns() const { return terms.size() * static_cast<std::size_t>(harmonics); }
};

/// One candidate density value at a gamma point: the extension of `piece`'s
/// Cauchy data to signed distance `distance`, with basis argument `arg` in [-1, 1].
struct DensitySlot {
  std::uint32_t gamma_pos = 0;
  std::uint32_t piece = 0;
  double distance = 0.0;
  double arg = 1.0;
};

/// One auxiliary grid with its point sets and the slots on its gamma.
/// Every gamma point owns at least one slot; slots are sorted by gamma_pos.
/// A point with several slots takes their mean as its effective density.
struct BoundarySubdomain {
  GridSpec grid;
  PointClassification pc;
  std::vector<DensitySlot> slots;
};

/// Spectral unknowns shared by any number of subdomains.
struct BoundaryLayout {
  std::vector<SpectralPiece> pieces;
  std::vector<BoundarySubdomain> subdomains;

  std::size_t column_count() const;
  std::size_t piece_offset(std::size_t piece) const;
  /// Throws std::invalid_argument on unsorted slots, bad piece ids or uncovered gamma points.
  void validate() const;
};

struct ColumnId {
  std::size_t piece = 0;
  int term = 0;
  int nu = 0;
};
ColumnId column_id(const BoundaryLayout& layout, std::size_t column);

/// Value of one extension basis function at a slot (zero for slots of another piece).
double slot_basis_value(const DensitySlot& slot, std::size_t piece, int term, int nu);

/// Mean of the slot values at each gamma point.
BoundaryDensity effective_density(std::size_t gamma_size, std::span<const DensitySlot> slots,
                                  std::span<const double> slot_values);

/// Two-candidate form: NaN marks "no candidate". Points with both take the
/// mean, points with one keep it, points with none become 0.
BoundaryDensity effective_density(std::span<const double> first, std::span<const double> second);

struct BepOptions {
  /// Upper bound on memory spent caching per-column potentials on N+.
  std::size_t potential_cache_bytes = std::size_t{1} << 30;
  int threads = 0;
};

struct BepSolution {
  Eigen::VectorXd coeffs;
  double residual = 0.0;  // ||B C - rhs||_inf / ||rhs||_inf (0 when rhs = 0)
};

/// Reduced boundary equations with projections, stacked over subdomains:
/// one row per slot whose point lies in M+ of its subdomain, entry
/// slot value - (P v_eff)(point) for each spectral column.
class BepSystem {
 public:
  BepSystem(std::shared_ptr<const BoundaryLayout> layout,
            std::vector<std::shared_ptr<const SolverPlan>> plans, const BepOptions& options = {});

  double dt() const { return dt_; }
  Eigen::Index rows() const { return matrix_.rows(); }
  Eigen::Index cols() const { return matrix_.cols(); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const BoundaryLayout& layout() const { return *layout_; }
  const SolverPlan& plan(std::size_t sub) const { return *plans_[sub]; }
  std::shared_ptr<const SolverPlan> plan_ptr(std::size_t sub) const { return plans_[sub]; }
  int rank() const { return static_cast<int>(cod_.rank()); }
  /// Ratio of extreme pivots of the column-scaled factorization.
  double condition_estimate() const { return condition_; }
  bool caches_potentials() const { return !potentials_.empty(); }

  /// Right-hand side from per-subdomain particular solutions.
  Eigen::VectorXd rhs(std::span<const GridField> particular) const;
  /// Minimum-norm least-squares solve.
  BepSolution solve(const Eigen::VectorXd& rhs) const;

  std::vector<double> slot_values(std::size_t sub, const Eigen::VectorXd& coeffs) const;
  BoundaryDensity density(std::size_t sub, const Eigen::VectorXd& coeffs) const;
  /// out += sum_k coeffs_k * (P v_k) on N+ of subdomain `sub`. Requires caches_potentials().
  void add_potentials(std::size_t sub, const Eigen::VectorXd& coeffs, GridField& out) const;

 private:
  std::shared_ptr<const BoundaryLayout> layout_;
  std::vector<std::shared_ptr<const SolverPlan>> plans_;
  double dt_ = 0.0;
  Eigen::MatrixXd matrix_;
  Eigen::VectorXd column_scale_;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
  double condition_ = 0.0;
  struct Row {
    std::uint32_t sub;
    std::uint32_t slot;
  };
  std::vector<Row> row_map_;
  // potentials_[column][sub] on pc.n_plus order
  std::vector<std::vector<std::vector<double>>> potentials_;
};

/// Result of reconstructing one field on one subdomain.
struct FieldUpdate {
  GridField field;
  double density_clamp = 0.0;  // largest |negative| density value set to 0
  double field_clamp = 0.0;    // largest |negative| N+ value set to 0
  double min_before_clamp = 0.0;
  double min_interior = 0.0;   // minimum over M+ before the clamp
};

/// Green's formula from spectral coefficients: density from the slots, negative
/// densities clamped to 0, then u = G f + P u_gamma on N+ (negative values clamped).
FieldUpdate reconstruct_field(const BepSystem& system, std::size_t sub,
                              const Eigen::VectorXd& coeffs, const GridField& particular,
                              const GridField& f);

// Single-domain conveniences.

/// Spectral Cauchy data of one piece.
struct SpectralCoefficients {
  int harmonics = 1;
  std::vector<int> terms;
  std::vector<double> values;  // term-major
  double residual = 0.0;
  double condition = 0.0;
  double coeff(int term, int nu) const;
};

/// Extension terms used on a Neumann boundary: {0, 2} when beta = 1, {0} when beta = 0.
std::vector<int> neumann_terms(int beta);

/// Single-sphere layout: one Gamma piece, one slot per gamma point with arg = cos(theta).
BoundaryLayout single_domain_layout(const GridSpec& grid, const PointClassification& pc,
                                    const Sphere& sphere, int max_degree, int beta);

/// Builds and factors the single-domain BEP. Throws std::invalid_argument
/// unless (beta + 1)(M + 1) < |gamma_in|.
BepSystem assemble_bep(std::shared_ptr<const SolverPlan> plan, const GridSpec& grid,
                       const PointClassification& pc, const Sphere& sphere, int max_degree,
                       int beta, const BepOptions& options = {});

SpectralCoefficients solve_bep(const BepSystem& system, const Eigen::VectorXd& rhs);

/// sum_{t, nu} C^t_nu * (d^t / t!) P_nu(cos theta) at every point of `geom`.
BoundaryDensity reconstruct_density(const SpectralCoefficients& coeffs,
                                    std::span<const SurfacePoint> geom);

}  // namespace dpm
