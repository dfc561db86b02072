#include "dpm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dpm {

GridSpec build_grid(double radius, int cells, Vec3 center) {
  if (cells < 8) throw std::invalid_argument("build_grid: N must be >= 8");
  if (!(radius > 0.0)) throw std::invalid_argument("build_grid: radius must be positive");
  GridSpec g;
  g.radius = radius;
  g.cells = cells;
  g.h = 2.0 * radius / (cells - 4);
  g.center = center;
  const double half = 0.5 * cells * g.h;
  g.cube_min = {center.x - half, center.y - half, center.z - half};
  g.cube_max = {center.x + half, center.y + half, center.z + half};
  return g;
}

Region ball_region(const Sphere& s) {
  return {[s](const Vec3& p) { return (p - s.center).norm() < s.radius; }, "ball"};
}

Region shell_region(Vec3 center, double r_in, double r_out) {
  return {[=](const Vec3& p) {
            const double d = (p - center).norm();
            return d > r_in && d < r_out;
          },
          "shell"};
}

Region cap_region(const Sphere& outer, const Sphere& cap) {
  return {[=](const Vec3& p) {
            return (p - outer.center).norm() < outer.radius && (p - cap.center).norm() < cap.radius;
          },
          "cap"};
}

Region cap_complement_region(const Sphere& outer, const Sphere& cap) {
  return {[=](const Vec3& p) {
            return (p - outer.center).norm() < outer.radius && (p - cap.center).norm() > cap.radius;
          },
          "cap-complement"};
}

std::ptrdiff_t PointClassification::gamma_position(Index i) const {
  const auto it = std::lower_bound(gamma.begin(), gamma.end(), i);
  if (it == gamma.end() || *it != i) return -1;
  return it - gamma.begin();
}

PointClassification classify_points(const GridSpec& grid, const Region& region) {
  PointClassification pc;
  pc.flags.assign(grid.total_points(), 0);
  const int n = grid.cells;
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= n; ++k)
      for (int l = 1; l <= n; ++l) {
        const Index idx = grid.index(j, k, l);
        pc.flags[idx] = region.inside(grid.position(j, k, l)) ? kMPlus : kMMinus;
      }

  // N+/N- are unions of 7-point stencils over M+/M-.
  std::array<std::ptrdiff_t, 3> steps{grid.axis_step(0), grid.axis_step(1), grid.axis_step(2)};
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= n; ++k)
      for (int l = 1; l <= n; ++l) {
        const Index idx = grid.index(j, k, l);
        const std::uint8_t mark = (pc.flags[idx] & kMPlus) ? kNPlus : kNMinus;
        pc.flags[idx] |= mark;
        for (auto s : steps) {
          pc.flags[idx + s] |= mark;
          pc.flags[idx - s] |= mark;
        }
      }

  for (Index idx = 0; idx < pc.flags.size(); ++idx) {
    auto& f = pc.flags[idx];
    if (f & kMPlus) pc.m_plus.push_back(idx);
    if (f & kMMinus) pc.m_minus.push_back(idx);
    if (f & kNPlus) pc.n_plus.push_back(idx);
    if ((f & kNPlus) && (f & kNMinus)) {
      f |= kGamma;
      pc.gamma.push_back(idx);
      if (f & kMPlus)
        pc.gamma_in.push_back(idx);
      else
        pc.gamma_ex.push_back(idx);
    }
  }
  return pc;
}

PointClassification classify_points(const GridSpec& grid, const Sphere& sphere) {
  return classify_points(grid, ball_region(sphere));
}

SurfacePoint boundary_projection(const Vec3& point, const Sphere& sphere) {
  const Vec3 rel = point - sphere.center;
  const double dist = rel.norm();
  if (dist == 0.0) throw std::invalid_argument("boundary_projection: point at sphere center");
  SurfacePoint sp;
  sp.normal = (1.0 / dist) * rel;
  sp.projection = sphere.center + sphere.radius * sp.normal;
  sp.distance = dist - sphere.radius;
  sp.theta = std::acos(std::clamp(sp.normal.z, -1.0, 1.0));
  sp.phi = std::atan2(sp.normal.y, sp.normal.x);
  return sp;
}

std::vector<SurfacePoint> boundary_geometry(const GridSpec& grid, std::span<const Index> points,
                                            const Sphere& sphere) {
  std::vector<SurfacePoint> out;
  out.reserve(points.size());
  for (Index p : points) out.push_back(boundary_projection(grid.position(p), sphere));
  return out;
}

BoundarySplit case2_boundary_split(const GridSpec& grid, std::span<const Index> points,
                                   const Sphere& sphere, double theta_star, double eps) {
  if (!(theta_star > 0.0 && theta_star < std::numbers::pi))
    throw std::invalid_argument("case2_boundary_split: theta* must lie in (0, pi)");
  BoundarySplit split;
  for (Index p : points) {
    const double theta = boundary_projection(grid.position(p), sphere).theta;
    if (theta <= theta_star + eps) split.first.push_back(p);
    if (theta >= theta_star - eps) split.second.push_back(p);
  }
  return split;
}

}  // namespace dpm
