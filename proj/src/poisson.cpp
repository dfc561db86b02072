#include "dpm/poisson.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>
#include <map>
#include <numbers>
#include <stdexcept>

namespace dpm {

namespace detail {

// In-place 3D RODFT00 (DST-I) plan, shared by all solver plans of the same N.
struct TransformPlan {
  int cells = 0;
  fftw_plan plan = nullptr;
  ~TransformPlan() {
    if (plan) fftw_destroy_plan(plan);
  }
};

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Measured plans may differ between processes, which breaks bit-reproducible
// runs, so they are opt-in.
unsigned planner_flags() {
  const char* env = std::getenv("DPM_FFTW_PLANNER");
  if (env && std::string(env) == "measure") return FFTW_MEASURE;
  if (env && std::string(env) == "patient") return FFTW_PATIENT;
  return FFTW_ESTIMATE;
}

std::shared_ptr<TransformPlan> transform_for(int cells) {
  static std::map<int, std::weak_ptr<TransformPlan>> registry;
  std::lock_guard lock(planner_mutex());
  if (auto existing = registry[cells].lock()) return existing;
  auto tp = std::make_shared<TransformPlan>();
  tp->cells = cells;
  const std::size_t n3 = static_cast<std::size_t>(cells) * cells * cells;
  auto* scratch = static_cast<double*>(fftw_malloc(n3 * sizeof(double)));
  tp->plan = fftw_plan_r2r_3d(cells, cells, cells, scratch, scratch, FFTW_RODFT00, FFTW_RODFT00,
                              FFTW_RODFT00, planner_flags());
  fftw_free(scratch);
  if (!tp->plan) throw std::runtime_error("fftw: failed to create DST-I plan");
  registry[cells] = tp;
  return tp;
}

}  // namespace
}  // namespace detail

SolverWorkspace::SolverWorkspace(int cells) : cells_(cells) {
  const std::size_t n3 = static_cast<std::size_t>(cells) * cells * cells;
  data_ = static_cast<double*>(fftw_malloc(n3 * sizeof(double)));
  if (!data_) throw std::bad_alloc();
}

SolverWorkspace::~SolverWorkspace() {
  if (data_) fftw_free(data_);
}

SolverWorkspace::SolverWorkspace(SolverWorkspace&& o) noexcept : cells_(o.cells_), data_(o.data_) {
  o.data_ = nullptr;
  o.cells_ = 0;
}

SolverWorkspace& SolverWorkspace::operator=(SolverWorkspace&& o) noexcept {
  if (this != &o) {
    if (data_) fftw_free(data_);
    cells_ = o.cells_;
    data_ = o.data_;
    o.data_ = nullptr;
    o.cells_ = 0;
  }
  return *this;
}

SolverPlan::SolverPlan(int cells, double h, double dt) : cells_(cells), h_(h), dt_(dt) {
  if (cells < 4) throw std::invalid_argument("SolverPlan: N must be >= 4");
  if (!(h > 0.0)) throw std::invalid_argument("SolverPlan: h must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("SolverPlan: dt must be positive");
  eigen_.resize(cells);
  for (int m = 1; m <= cells; ++m) {
    // 2(1 - cos a) = 4 sin^2(a/2), better conditioned for small a.
    const double s = std::sin(0.5 * m * std::numbers::pi / (cells + 1));
    eigen_[m - 1] = 4.0 * s * s / (h * h);
  }
  transform_ = detail::transform_for(cells);
}

void SolverPlan::solve(const GridField& q, GridField& v, SolverWorkspace& ws) const {
  const int n = cells_;
  if (q.cells() != n) throw std::invalid_argument("solve_ap: grid size does not match plan");
  if (ws.cells() != n) ws = SolverWorkspace(n);
  if (v.cells() != n || v.size() != q.size()) {
    GridSpec g;
    g.cells = n;
    v = GridField(g);
  }
  const int s = n + 2;
  double* buf = ws.data();
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const double* src = q.data() + (static_cast<std::size_t>(j + 1) * s + (k + 1)) * s + 1;
      std::memcpy(buf + (static_cast<std::size_t>(j) * n + k) * n, src, n * sizeof(double));
    }

  fftw_execute_r2r(transform_->plan, buf, buf);
  const double norm = 1.0 / (8.0 * std::pow(static_cast<double>(n + 1), 3));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const double base = 1.0 + dt_ * (eigen_[j] + eigen_[k]);
      double* row = buf + (static_cast<std::size_t>(j) * n + k) * n;
      for (int l = 0; l < n; ++l) row[l] *= norm / (base + dt_ * eigen_[l]);
    }
  fftw_execute_r2r(transform_->plan, buf, buf);

  std::fill(v.values().begin(), v.values().end(), 0.0);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      double* dst = v.data() + (static_cast<std::size_t>(j + 1) * s + (k + 1)) * s + 1;
      std::memcpy(dst, buf + (static_cast<std::size_t>(j) * n + k) * n, n * sizeof(double));
    }
}

GridField SolverPlan::solve(const GridField& q) const {
  SolverWorkspace ws(cells_);
  GridField v;
  solve(q, v, ws);
  return v;
}

GridField apply_operator(const GridSpec& grid, double dt, const GridField& v) {
  GridField out(grid);
  const double a = dt / (grid.h * grid.h);
  const int n = grid.cells;
  const auto sj = grid.axis_step(0), sk = grid.axis_step(1), sl = grid.axis_step(2);
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= n; ++k)
      for (int l = 1; l <= n; ++l) {
        const Index i = grid.index(j, k, l);
        const double nb = v[i + sj] + v[i - sj] + v[i + sk] + v[i - sk] + v[i + sl] + v[i - sl];
        out[i] = (1.0 + 6.0 * a) * v[i] - a * nb;
      }
  return out;
}

GridField dense_oracle_solve(int cells, double h, double dt, const GridField& q) {
  if (cells > 16) throw std::invalid_argument("dense_oracle_solve: N must be <= 16");
  if (cells < 1 || !(h > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("dense_oracle_solve: invalid grid or time step");
  if (q.cells() != cells) throw std::invalid_argument("dense_oracle_solve: size mismatch");
  const int n = cells;
  const int dim = n * n * n;
  const double a = dt / (h * h);
  auto flat = [n](int j, int k, int l) { return (j * n + k) * n + l; };
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd b(dim);
  GridSpec g;
  g.cells = n;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        const int r = flat(j, k, l);
        A(r, r) = 1.0 + 6.0 * a;
        const int nb[6][3] = {{j - 1, k, l}, {j + 1, k, l}, {j, k - 1, l},
                              {j, k + 1, l}, {j, k, l - 1}, {j, k, l + 1}};
        for (const auto& p : nb) {
          if (p[0] < 0 || p[0] >= n || p[1] < 0 || p[1] >= n || p[2] < 0 || p[2] >= n) continue;
          A(r, flat(p[0], p[1], p[2])) = -a;
        }
        b(r) = q[g.index(j + 1, k + 1, l + 1)];
      }
  const Eigen::VectorXd x = A.partialPivLu().solve(b);
  GridField v(g);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) v[g.index(j + 1, k + 1, l + 1)] = x(flat(j, k, l));
  return v;
}

std::shared_ptr<const SolverPlan> PlanCache::get(int cells, double h, double dt) {
  std::lock_guard lock(mutex_);
  const Key key{cells, h, dt};
  for (auto it = entries_.begin(); it != entries_.end(); ++it) {
    if (it->first == key) {
      entries_.splice(entries_.begin(), entries_, it);
      return entries_.front().second;
    }
  }
  auto plan = std::make_shared<const SolverPlan>(cells, h, dt);
  ++builds_;
  entries_.emplace_front(key, plan);
  while (entries_.size() > capacity_) entries_.pop_back();
  return plan;
}

std::size_t PlanCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

}  // namespace dpm
