#include "dpm/dpm_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dpm/parallel.hpp"

namespace dpm {

void add_density_source(const GridSpec& grid, const PointClassification& pc,
                        std::span<const double> v_gamma, double dt, GridField& q) {
  if (v_gamma.size() != pc.gamma.size())
    throw std::invalid_argument("add_density_source: density length differs from |gamma|");
  const double a = dt / (grid.h * grid.h);
  const std::ptrdiff_t steps[3] = {grid.axis_step(0), grid.axis_step(1), grid.axis_step(2)};
  for (std::size_t g = 0; g < pc.gamma.size(); ++g) {
    const double v = v_gamma[g];
    if (v == 0.0) continue;
    const Index p = pc.gamma[g];
    if (pc.has(p, kMMinus)) q[p] += (1.0 + 6.0 * a) * v;
    for (auto s : steps) {
      if (pc.has(p + s, kMMinus)) q[p + s] -= a * v;
      if (pc.has(p - s, kMMinus)) q[p - s] -= a * v;
    }
  }
}

void restrict_to_n_plus(const PointClassification& pc, GridField& u) {
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!(pc.flags[i] & kNPlus)) u[static_cast<Index>(i)] = 0.0;
}

namespace {

void check_plan(const SolverPlan& plan, const GridSpec& grid) {
  if (plan.cells() != grid.cells) throw std::invalid_argument("plan/grid size mismatch");
}

GridField source_on_m_plus(const GridSpec& grid, const GridField& f,
                           const PointClassification& pc) {
  if (!f.matches(grid)) throw std::invalid_argument("right-hand side does not match grid");
  GridField q(grid);
  for (Index i : pc.m_plus) q[i] = f[i];
  return q;
}

}  // namespace

GridField particular_solution(const SolverPlan& plan, const GridSpec& grid, const GridField& f,
                              const PointClassification& pc) {
  check_plan(plan, grid);
  GridField v = plan.solve(source_on_m_plus(grid, f, pc));
  restrict_to_n_plus(pc, v);
  return v;
}

GridField difference_potential(const SolverPlan& plan, const GridSpec& grid,
                               std::span<const double> v_gamma, const PointClassification& pc) {
  check_plan(plan, grid);
  GridField q(grid);
  add_density_source(grid, pc, v_gamma, plan.dt(), q);
  GridField v = plan.solve(q);
  restrict_to_n_plus(pc, v);
  return v;
}

GridField greens_formula(const SolverPlan& plan, const GridSpec& grid,
                         std::span<const double> u_gamma, const GridField& f,
                         const PointClassification& pc) {
  check_plan(plan, grid);
  GridField q = source_on_m_plus(grid, f, pc);
  add_density_source(grid, pc, u_gamma, plan.dt(), q);
  GridField v = plan.solve(q);
  restrict_to_n_plus(pc, v);
  return v;
}

std::vector<double> trace(const GridField& u, std::span<const Index> points) {
  std::vector<double> out;
  out.reserve(points.size());
  for (Index p : points) out.push_back(u[p]);
  return out;
}

double legendre(int nu, double x) {
  if (nu < 0) throw std::invalid_argument("legendre: degree must be >= 0");
  if (nu == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (int n = 1; n < nu; ++n) {
    const double p2 = ((2.0 * n + 1.0) * x * p1 - n * p0) / (n + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

void legendre_table(int max_degree, double x, double* out) {
  out[0] = 1.0;
  if (max_degree >= 1) out[1] = x;
  for (int n = 1; n < max_degree; ++n)
    out[n + 1] = ((2.0 * n + 1.0) * x * out[n] - n * out[n - 1]) / (n + 1.0);
}

double zonal_basis(int nu, double theta) { return legendre(nu, std::cos(theta)); }

namespace {

inline double taylor_weight(int term, double d) {
  switch (term) {
    case 0:
      return 1.0;
    case 1:
      return d;
    case 2:
      return 0.5 * d * d;
    default:
      throw std::out_of_range("extension term must be 0, 1 or 2");
  }
}

}  // namespace

BoundaryDensity extension_column(std::span<const SurfacePoint> geom, int nu, int term) {
  BoundaryDensity out;
  out.reserve(geom.size());
  taylor_weight(term, 0.0);
  for (const auto& sp : geom) out.push_back(taylor_weight(term, sp.distance) * zonal_basis(nu, sp.theta));
  return out;
}

std::size_t BoundaryLayout::column_count() const {
  std::size_t n = 0;
  for (const auto& p : pieces) n += p.columns();
  return n;
}

std::size_t BoundaryLayout::piece_offset(std::size_t piece) const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < piece; ++p) n += pieces.at(p).columns();
  return n;
}

void BoundaryLayout::validate() const {
  for (const auto& p : pieces) {
    if (p.harmonics < 1) throw std::invalid_argument("layout: piece needs at least one harmonic");
    for (int t : p.terms)
      if (t < 0 || t > 2) throw std::invalid_argument("layout: extension term out of range");
  }
  for (const auto& sub : subdomains) {
    std::vector<char> covered(sub.pc.gamma.size(), 0);
    std::uint32_t last = 0;
    for (const auto& s : sub.slots) {
      if (s.gamma_pos >= sub.pc.gamma.size() || s.piece >= pieces.size())
        throw std::invalid_argument("layout: slot references unknown point or piece");
      if (s.gamma_pos < last) throw std::invalid_argument("layout: slots must be sorted");
      last = s.gamma_pos;
      covered[s.gamma_pos] = 1;
    }
    if (std::find(covered.begin(), covered.end(), 0) != covered.end())
      throw std::invalid_argument("layout: gamma point without a density slot");
  }
}

ColumnId column_id(const BoundaryLayout& layout, std::size_t column) {
  std::size_t base = 0;
  for (std::size_t p = 0; p < layout.pieces.size(); ++p) {
    const auto& piece = layout.pieces[p];
    if (column < base + piece.columns()) {
      const std::size_t local = column - base;
      const auto ti = local / static_cast<std::size_t>(piece.harmonics);
      return {p, piece.terms[ti], static_cast<int>(local % piece.harmonics)};
    }
    base += piece.columns();
  }
  throw std::out_of_range("column_id: column index out of range");
}

double slot_basis_value(const DensitySlot& slot, std::size_t piece, int term, int nu) {
  if (slot.piece != piece) return 0.0;
  return taylor_weight(term, slot.distance) * legendre(nu, slot.arg);
}

BoundaryDensity effective_density(std::size_t gamma_size, std::span<const DensitySlot> slots,
                                  std::span<const double> slot_values) {
  if (slots.size() != slot_values.size())
    throw std::invalid_argument("effective_density: slot/value length mismatch");
  BoundaryDensity sum(gamma_size, 0.0);
  std::vector<int> count(gamma_size, 0);
  for (std::size_t s = 0; s < slots.size(); ++s) {
    sum[slots[s].gamma_pos] += slot_values[s];
    ++count[slots[s].gamma_pos];
  }
  for (std::size_t g = 0; g < gamma_size; ++g)
    if (count[g] > 1) sum[g] /= count[g];
  return sum;
}

BoundaryDensity effective_density(std::span<const double> first, std::span<const double> second) {
  if (first.size() != second.size())
    throw std::invalid_argument("effective_density: candidate lengths differ");
  BoundaryDensity out(first.size(), 0.0);
  for (std::size_t i = 0; i < first.size(); ++i) {
    const bool a = !std::isnan(first[i]), b = !std::isnan(second[i]);
    if (a && b)
      out[i] = 0.5 * (first[i] + second[i]);
    else if (a)
      out[i] = first[i];
    else if (b)
      out[i] = second[i];
  }
  return out;
}

BepSystem::BepSystem(std::shared_ptr<const BoundaryLayout> layout,
                     std::vector<std::shared_ptr<const SolverPlan>> plans, const BepOptions& options)
    : layout_(std::move(layout)), plans_(std::move(plans)) {
  if (!layout_) throw std::invalid_argument("BepSystem: null layout");
  const auto& L = *layout_;
  L.validate();
  const std::size_t nsub = L.subdomains.size();
  if (nsub == 0 || plans_.size() != nsub)
    throw std::invalid_argument("BepSystem: need one solver plan per subdomain");
  dt_ = plans_[0]->dt();
  for (std::size_t s = 0; s < nsub; ++s) {
    if (plans_[s]->dt() != dt_) throw std::invalid_argument("BepSystem: subdomain plans differ in dt");
    if (plans_[s]->cells() != L.subdomains[s].grid.cells || plans_[s]->h() != L.subdomains[s].grid.h)
      throw std::invalid_argument("BepSystem: plan does not match subdomain grid");
  }

  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> sub_rows(nsub);
  for (std::size_t s = 0; s < nsub; ++s) {
    const auto& sub = L.subdomains[s];
    for (std::uint32_t k = 0; k < sub.slots.size(); ++k) {
      if (!sub.pc.has(sub.pc.gamma[sub.slots[k].gamma_pos], kMPlus)) continue;
      sub_rows[s].emplace_back(static_cast<std::uint32_t>(row_map_.size()), k);
      row_map_.push_back({static_cast<std::uint32_t>(s), k});
    }
  }
  const std::size_t ncols = L.column_count();
  if (ncols == 0 || ncols >= row_map_.size())
    throw std::invalid_argument("BepSystem: spectral unknowns must be fewer than reduced BEP rows");
  matrix_.setZero(static_cast<Eigen::Index>(row_map_.size()), static_cast<Eigen::Index>(ncols));

  std::size_t nplus_total = 0;
  for (const auto& sub : L.subdomains) nplus_total += sub.pc.n_plus.size();
  const bool cache = ncols * nplus_total * sizeof(double) <= options.potential_cache_bytes;
  if (cache) {
    potentials_.resize(ncols);
    for (auto& col : potentials_) col.resize(nsub);
  }

  const std::size_t tasks = ncols * nsub;
  const int workers = static_cast<int>(std::min<std::size_t>(
      tasks, static_cast<std::size_t>(options.threads > 0 ? options.threads : default_threads())));
  struct Scratch {
    GridField q, v;
    SolverWorkspace ws;
  };
  std::vector<std::vector<std::unique_ptr<Scratch>>> scratch(workers);
  for (auto& w : scratch) w.resize(nsub);

  parallel_for(
      tasks,
      [&](std::size_t task, int w) {
        const std::size_t col = task / nsub, s = task % nsub;
        const auto& sub = L.subdomains[s];
        const ColumnId id = column_id(L, col);
        auto& sc = scratch[w][s];
        if (!sc) {
          sc = std::make_unique<Scratch>();
          sc->q = GridField(sub.grid);
          sc->ws = SolverWorkspace(sub.grid.cells);
        }
        std::vector<double> values(sub.slots.size());
        for (std::size_t k = 0; k < sub.slots.size(); ++k)
          values[k] = slot_basis_value(sub.slots[k], id.piece, id.term, id.nu);
        const BoundaryDensity dens = effective_density(sub.pc.gamma.size(), sub.slots, values);
        sc->q.fill(0.0);
        add_density_source(sub.grid, sub.pc, dens, dt_, sc->q);
        plans_[s]->solve(sc->q, sc->v, sc->ws);
        for (const auto& [row, k] : sub_rows[s]) {
          const Index p = sub.pc.gamma[sub.slots[k].gamma_pos];
          matrix_(row, static_cast<Eigen::Index>(col)) = values[k] - sc->v[p];
        }
        if (cache) {
          auto& pot = potentials_[col][s];
          pot.resize(sub.pc.n_plus.size());
          for (std::size_t i = 0; i < pot.size(); ++i) pot[i] = sc->v[sub.pc.n_plus[i]];
        }
      },
      workers);

  column_scale_.resize(static_cast<Eigen::Index>(ncols));
  for (Eigen::Index c = 0; c < matrix_.cols(); ++c) {
    const double n = matrix_.col(c).norm();
    column_scale_(c) = n > 0.0 ? 1.0 / n : 1.0;
  }
  cod_.compute(matrix_ * column_scale_.asDiagonal());
  const auto r = cod_.rank();
  if (r == 0) {
    condition_ = std::numeric_limits<double>::infinity();
  } else {
    const auto& qtz = cod_.matrixQTZ();
    double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < r; ++i) {
      dmax = std::max(dmax, std::abs(qtz(i, i)));
      dmin = std::min(dmin, std::abs(qtz(i, i)));
    }
    condition_ = r < matrix_.cols() ? std::numeric_limits<double>::infinity() : dmax / dmin;
  }
}

Eigen::VectorXd BepSystem::rhs(std::span<const GridField> particular) const {
  const auto& L = *layout_;
  if (particular.size() != L.subdomains.size())
    throw std::invalid_argument("BepSystem::rhs: one particular solution per subdomain");
  Eigen::VectorXd b(static_cast<Eigen::Index>(row_map_.size()));
  for (std::size_t r = 0; r < row_map_.size(); ++r) {
    const auto& sub = L.subdomains[row_map_[r].sub];
    const Index p = sub.pc.gamma[sub.slots[row_map_[r].slot].gamma_pos];
    b(static_cast<Eigen::Index>(r)) = particular[row_map_[r].sub][p];
  }
  return b;
}

BepSolution BepSystem::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != matrix_.rows()) throw std::invalid_argument("BepSystem::solve: rhs length");
  BepSolution sol;
  sol.coeffs = column_scale_.asDiagonal() * cod_.solve(rhs);
  const double bn = rhs.lpNorm<Eigen::Infinity>();
  sol.residual = bn > 0.0 ? (matrix_ * sol.coeffs - rhs).lpNorm<Eigen::Infinity>() / bn : 0.0;
  return sol;
}

std::vector<double> BepSystem::slot_values(std::size_t sub, const Eigen::VectorXd& coeffs) const {
  const auto& L = *layout_;
  if (coeffs.size() != matrix_.cols()) throw std::invalid_argument("slot_values: coefficient count");
  const auto& sd = L.subdomains.at(sub);
  std::vector<double> out(sd.slots.size(), 0.0);
  int max_h = 1;
  for (const auto& p : L.pieces) max_h = std::max(max_h, p.harmonics);
  std::vector<double> leg(static_cast<std::size_t>(max_h));
  for (std::size_t k = 0; k < sd.slots.size(); ++k) {
    const auto& slot = sd.slots[k];
    const auto& piece = L.pieces[slot.piece];
    legendre_table(piece.harmonics - 1, slot.arg, leg.data());
    const std::size_t base = L.piece_offset(slot.piece);
    double acc = 0.0;
    for (std::size_t ti = 0; ti < piece.terms.size(); ++ti) {
      const double w = taylor_weight(piece.terms[ti], slot.distance);
      double s = 0.0;
      for (int nu = 0; nu < piece.harmonics; ++nu)
        s += coeffs(static_cast<Eigen::Index>(base + ti * piece.harmonics + nu)) * leg[nu];
      acc += w * s;
    }
    out[k] = acc;
  }
  return out;
}

BoundaryDensity BepSystem::density(std::size_t sub, const Eigen::VectorXd& coeffs) const {
  const auto& sd = layout_->subdomains.at(sub);
  return effective_density(sd.pc.gamma.size(), sd.slots, slot_values(sub, coeffs));
}

void BepSystem::add_potentials(std::size_t sub, const Eigen::VectorXd& coeffs,
                               GridField& out) const {
  if (!caches_potentials()) throw std::logic_error("add_potentials: potentials not cached");
  const auto& np = layout_->subdomains.at(sub).pc.n_plus;
  for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
    const double c = coeffs(k);
    if (c == 0.0) continue;
    const auto& pot = potentials_[static_cast<std::size_t>(k)][sub];
    for (std::size_t i = 0; i < np.size(); ++i) out[np[i]] += c * pot[i];
  }
}

FieldUpdate reconstruct_field(const BepSystem& system, std::size_t sub,
                              const Eigen::VectorXd& coeffs, const GridField& particular,
                              const GridField& f) {
  const auto& sd = system.layout().subdomains.at(sub);
  FieldUpdate up;
  BoundaryDensity dens = system.density(sub, coeffs);
  for (double& v : dens) {
    if (v < 0.0) {
      up.density_clamp = std::max(up.density_clamp, -v);
      v = 0.0;
    }
  }
  if (system.caches_potentials() && up.density_clamp == 0.0) {
    up.field = particular;
    system.add_potentials(sub, coeffs, up.field);
  } else {
    up.field = greens_formula(system.plan(sub), sd.grid, dens, f, sd.pc);
  }
  up.min_interior = std::numeric_limits<double>::infinity();
  for (Index i : sd.pc.m_plus) up.min_interior = std::min(up.min_interior, up.field[i]);
  double mn = std::numeric_limits<double>::infinity();
  for (Index i : sd.pc.n_plus) {
    double& v = up.field[i];
    mn = std::min(mn, v);
    if (v < 0.0) {
      up.field_clamp = std::max(up.field_clamp, -v);
      v = 0.0;
    }
  }
  up.min_before_clamp = mn;
  return up;
}

double SpectralCoefficients::coeff(int term, int nu) const {
  const auto it = std::find(terms.begin(), terms.end(), term);
  if (it == terms.end() || nu < 0 || nu >= harmonics) return 0.0;
  return values[static_cast<std::size_t>(it - terms.begin()) * harmonics + nu];
}

std::vector<int> neumann_terms(int beta) {
  if (beta != 0 && beta != 1) throw std::invalid_argument("beta must be 0 or 1");
  return beta == 1 ? std::vector<int>{0, 2} : std::vector<int>{0};
}

BoundaryLayout single_domain_layout(const GridSpec& grid, const PointClassification& pc,
                                    const Sphere& sphere, int max_degree, int beta) {
  if (max_degree < 0) throw std::invalid_argument("harmonic degree must be >= 0");
  BoundaryLayout L;
  L.pieces.push_back({"boundary", max_degree + 1, neumann_terms(beta)});
  BoundarySubdomain sub{grid, pc, {}};
  const auto geom = boundary_geometry(grid, pc.gamma, sphere);
  sub.slots.reserve(geom.size());
  for (std::size_t g = 0; g < geom.size(); ++g)
    sub.slots.push_back({static_cast<std::uint32_t>(g), 0, geom[g].distance, std::cos(geom[g].theta)});
  L.subdomains.push_back(std::move(sub));
  return L;
}

BepSystem assemble_bep(std::shared_ptr<const SolverPlan> plan, const GridSpec& grid,
                       const PointClassification& pc, const Sphere& sphere, int max_degree,
                       int beta, const BepOptions& options) {
  const std::size_t unknowns = static_cast<std::size_t>(beta + 1) * (max_degree + 1);
  if (unknowns >= pc.gamma_in.size())
    throw std::invalid_argument("assemble_bep: (beta+1)(M+1) must be below |gamma_in|");
  auto layout = std::make_shared<const BoundaryLayout>(
      single_domain_layout(grid, pc, sphere, max_degree, beta));
  return BepSystem(layout, {std::move(plan)}, options);
}

SpectralCoefficients solve_bep(const BepSystem& system, const Eigen::VectorXd& rhs) {
  const auto sol = system.solve(rhs);
  const auto& piece = system.layout().pieces.front();
  SpectralCoefficients out;
  out.harmonics = piece.harmonics;
  out.terms = piece.terms;
  out.values.assign(sol.coeffs.data(), sol.coeffs.data() + sol.coeffs.size());
  out.residual = sol.residual;
  out.condition = system.condition_estimate();
  return out;
}

BoundaryDensity reconstruct_density(const SpectralCoefficients& coeffs,
                                    std::span<const SurfacePoint> geom) {
  BoundaryDensity out(geom.size(), 0.0);
  std::vector<double> leg(static_cast<std::size_t>(coeffs.harmonics));
  for (std::size_t g = 0; g < geom.size(); ++g) {
    legendre_table(coeffs.harmonics - 1, std::cos(geom[g].theta), leg.data());
    double acc = 0.0;
    for (std::size_t ti = 0; ti < coeffs.terms.size(); ++ti) {
      double s = 0.0;
      for (int nu = 0; nu < coeffs.harmonics; ++nu) s += coeffs.values[ti * coeffs.harmonics + nu] * leg[nu];
      acc += taylor_weight(coeffs.terms[ti], geom[g].distance) * s;
    }
    out[g] = acc;
  }
  return out;
}

}  // namespace dpm
