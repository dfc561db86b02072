#pragma once

#include <cstddef>
#include <list>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "dpm/grid.hpp"

namespace dpm {

namespace detail {
struct TransformPlan;
}

/// Aligned N^3 scratch buffer for one transform solve. One per concurrent solver.
class SolverWorkspace {
 public:
  SolverWorkspace() = default;
  explicit SolverWorkspace(int cells);
  ~SolverWorkspace();
  SolverWorkspace(SolverWorkspace&& o) noexcept;
  SolverWorkspace& operator=(SolverWorkspace&& o) noexcept;
  SolverWorkspace(const SolverWorkspace&) = delete;
  SolverWorkspace& operator=(const SolverWorkspace&) = delete;

  int cells() const { return cells_; }
  double* data() { return data_; }

 private:
  int cells_ = 0;
  double* data_ = nullptr;
};

/// Spectral factorization of L = I - dt * Lap_h on the cube with zero ghost values.
///
/// The 7-point Dirichlet Laplacian is diagonalized by a 3D type-I sine
/// transform; its 1D eigenvalues are lambda_m = (2/h^2)(1 - cos(m pi/(N+1))).
class SolverPlan {
 public:
  /// Throws std::invalid_argument unless N >= 4, h > 0, dt > 0.
  SolverPlan(int cells, double h, double dt);

  int cells() const { return cells_; }
  double h() const { return h_; }
  double dt() const { return dt_; }
  /// lambda_m for m = 1..N (stored at m-1).
  const std::vector<double>& eigenvalues() const { return eigen_; }

  /// Solves L v = q on M0 (q read on interior centers only), v = 0 on the ghost layer.
  void solve(const GridField& q, GridField& v, SolverWorkspace& ws) const;
  GridField solve(const GridField& q) const;

 private:
  int cells_;
  double h_;
  double dt_;
  std::vector<double> eigen_;
  std::shared_ptr<detail::TransformPlan> transform_;
};

/// Convenience wrapper: solve_ap(plan, q) == plan.solve(q).
inline GridField solve_ap(const SolverPlan& plan, const GridField& q) { return plan.solve(q); }

/// Applies L = I - dt * Lap_h at every interior center (ghost values taken from `v`).
GridField apply_operator(const GridSpec& grid, double dt, const GridField& v);

/// Dense LU solve of the same auxiliary problem; test oracle, N <= 16.
GridField dense_oracle_solve(int cells, double h, double dt, const GridField& q);

/// LRU cache of solver plans keyed by (N, h, dt) with bitwise key comparison.
class PlanCache {
 public:
  explicit PlanCache(std::size_t capacity = 4) : capacity_(capacity) {}
  std::shared_ptr<const SolverPlan> get(int cells, double h, double dt);
  std::size_t size() const;
  std::size_t builds() const { return builds_; }

 private:
  using Key = std::tuple<int, double, double>;
  std::size_t capacity_;
  std::size_t builds_ = 0;
  mutable std::mutex mutex_;
  std::list<std::pair<Key, std::shared_ptr<const SolverPlan>>> entries_;
};

}  // namespace dpm
