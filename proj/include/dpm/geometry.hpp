#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dpm/grid.hpp"

namespace dpm {

struct Sphere {
  Vec3 center;
  double radius = 0.0;
};

/// Open region used to sort cell centers into M+ / M-.
/// `inside` must be false on the region's boundary.
struct Region {
  std::function<bool(const Vec3&)> inside;
  std::string name;
};

Region ball_region(const Sphere& s);
/// { p : r_in < |p - c| < r_out }
Region shell_region(Vec3 center, double r_in, double r_out);
/// Points inside `outer` and inside `cap`.
Region cap_region(const Sphere& outer, const Sphere& cap);
/// Points inside `outer` and outside the closed ball `cap`.
Region cap_complement_region(const Sphere& outer, const Sphere& cap);

enum PointFlag : std::uint8_t {
  kMPlus = 1u << 0,
  kMMinus = 1u << 1,
  kNPlus = 1u << 2,
  kNMinus = 1u << 3,
  kGamma = 1u << 4,
};

/// Point sets M+, M-, N+, N-, gamma, gamma_in, gamma_ex of one auxiliary grid.
/// All lists are sorted by canonical index.
struct PointClassification {
  std::vector<std::uint8_t> flags;  // over N0, see PointFlag
  std::vector<Index> m_plus;
  std::vector<Index> m_minus;
  std::vector<Index> n_plus;
  std::vector<Index> gamma;
  std::vector<Index> gamma_in;
  std::vector<Index> gamma_ex;

  bool has(Index i, PointFlag f) const { return (flags[i] & f) != 0; }
  /// Position of `i` in `gamma`, or -1.
  std::ptrdiff_t gamma_position(Index i) const;
};

PointClassification classify_points(const GridSpec& grid, const Region& region);
PointClassification classify_points(const GridSpec& grid, const Sphere& sphere);

/// Orthogonal projection of a point onto a sphere surface, with the signed
/// distance d (> 0 outside), polar/azimuthal angles about the sphere center
/// and the outward unit normal.
struct SurfacePoint {
  Vec3 projection;
  double distance = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  Vec3 normal;
};

/// Throws std::invalid_argument if `point` coincides with the sphere center.
SurfacePoint boundary_projection(const Vec3& point, const Sphere& sphere);

/// Per-gamma-point projection data, in the order of the input list.
std::vector<SurfacePoint> boundary_geometry(const GridSpec& grid, std::span<const Index> points,
                                            const Sphere& sphere);

struct BoundarySplit {
  std::vector<Index> first;   // polar angle in [0, theta* + eps]
  std::vector<Index> second;  // polar angle in [theta* - eps, pi]
};

/// Splits boundary points by the polar angle of their projection on `sphere`.
/// Requires 0 < theta_star < pi.
BoundarySplit case2_boundary_split(const GridSpec& grid, std::span<const Index> points,
                                   const Sphere& sphere, double theta_star, double eps);

}  // namespace dpm
