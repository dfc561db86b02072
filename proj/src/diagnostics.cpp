#include "dpm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace dpm {

namespace {

bool near_integer(double x, double tol = 1e-9) { return std::abs(x - std::round(x)) <= tol; }

}  // namespace

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

bool grids_nest(const GridSpec& coarse, const GridSpec& fine) {
  const double ratio = coarse.h / fine.h;
  if (!near_integer(ratio) || std::round(ratio) < 1.0) return false;
  for (double d : {coarse.cube_min.x - fine.cube_min.x, coarse.cube_min.y - fine.cube_min.y,
                   coarse.cube_min.z - fine.cube_min.z})
    if (!near_integer(d / fine.h)) return false;
  return true;
}

bool centers_coincide(const GridSpec& coarse, const GridSpec& fine) {
  const double ratio = coarse.h / fine.h;
  if (!near_integer(ratio)) return false;
  const Vec3 p = coarse.position(1, 1, 1);
  for (double d : {p.x - fine.cube_min.x, p.y - fine.cube_min.y, p.z - fine.cube_min.z})
    if (!near_integer(d / fine.h - 0.5)) return false;
  return true;
}

double sample_trilinear(const GridField& u, const GridSpec& grid, const PointClassification& pc,
                        const Vec3& p) {
  const double fx = (p.x - grid.cube_min.x) / grid.h + 0.5;
  const double fy = (p.y - grid.cube_min.y) / grid.h + 0.5;
  const double fz = (p.z - grid.cube_min.z) / grid.h + 0.5;
  const int j0 = static_cast<int>(std::floor(fx)), k0 = static_cast<int>(std::floor(fy)),
            l0 = static_cast<int>(std::floor(fz));
  const double wx = fx - j0, wy = fy - k0, wz = fz - l0;
  double acc = 0.0, wsum = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        const int j = j0 + a, k = k0 + b, l = l0 + c;
        if (!grid.is_interior(j, k, l)) continue;
        const Index i = grid.index(j, k, l);
        if (!pc.has(i, kNPlus)) continue;
        const double w = (a ? wx : 1 - wx) * (b ? wy : 1 - wy) * (c ? wz : 1 - wz);
        acc += w * u[i];
        wsum += w;
      }
  return wsum > 0.0 ? acc / wsum : 0.0;
}

GridField restrict_reference(const GridSpec& coarse, const PointClassification& coarse_pc,
                             const GridSpec& fine, const PointClassification& fine_pc,
                             const GridField& fine_field, Restriction mode) {
  if (!fine_field.matches(fine)) throw std::invalid_argument("restrict_reference: field/grid mismatch");
  if (mode == Restriction::automatic) {
    if (centers_coincide(coarse, fine) && std::lround(coarse.h / fine.h) == 1)
      mode = Restriction::coincident;
    else if (grids_nest(coarse, fine))
      mode = Restriction::cell_average;
    else
      mode = Restriction::trilinear;
  }
  if (mode == Restriction::coincident && !centers_coincide(coarse, fine))
    throw std::invalid_argument("restrict_reference: no coincident centers");
  if (mode == Restriction::cell_average && !grids_nest(coarse, fine))
    throw std::invalid_argument("restrict_reference: grids do not nest");

  GridField out(coarse);
  const long m = std::lround(coarse.h / fine.h);
  for (Index i : coarse_pc.m_plus) {
    const Vec3 p = coarse.position(i);
    if (mode == Restriction::coincident) {
      const int j = static_cast<int>(std::lround((p.x - fine.cube_min.x) / fine.h + 0.5));
      const int k = static_cast<int>(std::lround((p.y - fine.cube_min.y) / fine.h + 0.5));
      const int l = static_cast<int>(std::lround((p.z - fine.cube_min.z) / fine.h + 0.5));
      if (!fine.is_interior(j, k, l)) throw std::invalid_argument("restrict_reference: center off fine grid");
      out[i] = fine_field[fine.index(j, k, l)];
    } else if (mode == Restriction::cell_average) {
      // first fine cell of the block tiling this coarse cell
      const int j0 = static_cast<int>(std::lround((p.x - 0.5 * coarse.h - fine.cube_min.x) / fine.h)) + 1;
      const int k0 = static_cast<int>(std::lround((p.y - 0.5 * coarse.h - fine.cube_min.y) / fine.h)) + 1;
      const int l0 = static_cast<int>(std::lround((p.z - 0.5 * coarse.h - fine.cube_min.z) / fine.h)) + 1;
      double acc = 0.0;
      bool complete = true;
      for (long a = 0; a < m && complete; ++a)
        for (long b = 0; b < m && complete; ++b)
          for (long c = 0; c < m; ++c) {
            const int j = j0 + static_cast<int>(a), k = k0 + static_cast<int>(b),
                      l = l0 + static_cast<int>(c);
            if (!fine.is_interior(j, k, l) || !fine_pc.has(fine.index(j, k, l), kNPlus)) {
              complete = false;
              break;
            }
            acc += fine_field[fine.index(j, k, l)];
          }
      out[i] = complete ? acc / static_cast<double>(m * m * m)
                        : sample_trilinear(fine_field, fine, fine_pc, p);
    } else {
      out[i] = sample_trilinear(fine_field, fine, fine_pc, p);
    }
  }
  return out;
}

double error_inf(const GridField& u_h, const GridField& u_ref, const PointClassification& pc) {
  double e = 0.0;
  for (Index i : pc.m_plus) e = std::max(e, std::abs(u_h[i] - u_ref[i]));
  return e;
}

double error_inf(const GridField& u_h, const GridSpec& grid, const PointClassification& pc,
                 const GridField& u_ref, const GridSpec& ref_grid,
                 const PointClassification& ref_pc, Restriction mode) {
  return error_inf(u_h, restrict_reference(grid, pc, ref_grid, ref_pc, u_ref, mode), pc);
}

double error_rel_timeseries(std::span<const double> series_h, std::span<const double> series_ref,
                            double dt) {
  if (series_h.size() != series_ref.size())
    throw std::invalid_argument("error_rel_timeseries: series lengths differ");
  if (!(dt > 0.0)) throw std::invalid_argument("error_rel_timeseries: dt must be positive");
  std::vector<double> num(series_h.size()), den(series_h.size());
  for (std::size_t i = 0; i < series_h.size(); ++i) {
    const double d = series_h[i] - series_ref[i];
    num[i] = d * d * dt;
    den[i] = series_ref[i] * series_ref[i] * dt;
  }
  const double dn = pairwise_sum(den);
  if (dn == 0.0) throw std::invalid_argument("error_rel_timeseries: zero reference series");
  return std::sqrt(pairwise_sum(num)) / std::sqrt(dn);
}

double error_time(const GridField& u, const GridField& u_star, const PointClassification& pc) {
  if (u.size() != u_star.size()) throw std::invalid_argument("error_time: mesh mismatch");
  return error_inf(u, u_star, pc);
}

double max_density(const GridField& rho, const PointClassification& pc) {
  if (pc.m_plus.empty()) throw std::invalid_argument("max_density: empty mask");
  double m = -std::numeric_limits<double>::infinity();
  for (Index i : pc.m_plus) m = std::max(m, rho[i]);
  return m;
}

double second_moment(const GridField& rho, const GridSpec& grid, const PointClassification& pc) {
  std::vector<double> terms;
  terms.reserve(pc.m_plus.size());
  const double h3 = grid.h * grid.h * grid.h;
  for (Index i : pc.m_plus) {
    const Vec3 p = grid.position(i);
    terms.push_back(h3 * p.dot(p) * rho[i]);
  }
  return pairwise_sum(terms);
}

double free_energy(const GridField& rho, const GridField& c, const GridSpec& grid,
                   const PointClassification& pc) {
  std::vector<double> terms;
  terms.reserve(pc.m_plus.size());
  const double h = grid.h, h3 = h * h * h, k = 1.0 / (8.0 * h * h);
  for (Index i : pc.m_plus) {
    const double r = rho[i];
    if (r < 0.0) throw std::invalid_argument("free_energy: negative density");
    const double ci = c[i];
    double grad = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
      const auto s = grid.axis_step(axis);
      const double d = c[i + s] - c[i - s];
      grad += d * d;
    }
    const double rlnr = r > 0.0 ? r * std::log(r) : 0.0;
    terms.push_back(h3 * (rlnr - r * ci + 0.5 * ci * ci + k * grad));
  }
  return pairwise_sum(terms);
}

double total_mass(const GridField& rho, const GridSpec& grid, const PointClassification& pc) {
  std::vector<double> terms;
  terms.reserve(pc.m_plus.size());
  const double h3 = grid.h * grid.h * grid.h;
  for (Index i : pc.m_plus) terms.push_back(h3 * rho[i]);
  return pairwise_sum(terms);
}

bool blow_up_check(double max_now, double max_prev, double threshold) {
  return max_now - max_prev >= threshold;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 1; k < n; ++k) {
        const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 0 ? 1.0 : p1;
      const double pm = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pm) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace dpm
