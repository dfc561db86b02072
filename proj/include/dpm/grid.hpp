#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace dpm {

using Index = std::uint32_t;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

/// Cubic auxiliary domain discretized by N x N x N cells of width h.
///
/// The cube is sized from a sphere of radius r as [c - r - 2h, c + r + 2h]^3
/// with h = 2r/(N - 4), so the sphere sits two cells inside every face.
/// Cell (j,k,l), j,k,l in 1..N, is centered at cube_min + (j - 1/2, k - 1/2, l - 1/2) h.
/// Index 0 and N+1 address the ghost layer just outside the cube.
struct GridSpec {
  double radius = 0.0;
  int cells = 0;
  double h = 0.0;
  Vec3 center;
  Vec3 cube_min;
  Vec3 cube_max;

  /// Points per axis including the ghost layer.
  int stride() const { return cells + 2; }
  std::size_t total_points() const {
    const auto n = static_cast<std::size_t>(stride());
    return n * n * n;
  }

  /// Canonical linear index: lexicographic in (j, k, l), j slowest.
  Index index(int j, int k, int l) const {
    const int n = stride();
    return static_cast<Index>((static_cast<std::size_t>(j) * n + k) * n + l);
  }
  std::array<int, 3> ijk(Index idx) const {
    const int n = stride();
    const int l = static_cast<int>(idx % n);
    const int k = static_cast<int>((idx / n) % n);
    const int j = static_cast<int>(idx / (static_cast<std::size_t>(n) * n));
    return {j, k, l};
  }
  Vec3 position(int j, int k, int l) const {
    return {cube_min.x + (j - 0.5) * h, cube_min.y + (k - 0.5) * h, cube_min.z + (l - 0.5) * h};
  }
  Vec3 position(Index idx) const {
    const auto [j, k, l] = ijk(idx);
    return position(j, k, l);
  }
  bool is_interior(int j, int k, int l) const {
    return j >= 1 && j <= cells && k >= 1 && k <= cells && l >= 1 && l <= cells;
  }
  /// Offset of the +1 neighbour along axis 0 (j), 1 (k) or 2 (l).
  std::ptrdiff_t axis_step(int axis) const {
    const std::ptrdiff_t n = stride();
    return axis == 0 ? n * n : (axis == 1 ? n : 1);
  }
};

/// Builds the auxiliary grid for a sphere of radius r centered at `center`.
/// Throws std::invalid_argument for N < 8 or r <= 0.
GridSpec build_grid(double radius, int cells, Vec3 center = {});

/// Scalar grid function over N0 (N^3 centers plus one ghost layer).
class GridField {
 public:
  GridField() = default;
  explicit GridField(const GridSpec& grid, double fill = 0.0)
      : cells_(grid.cells), values_(grid.total_points(), fill) {}

  int cells() const { return cells_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](Index i) { return values_[i]; }
  double operator[](Index i) const { return values_[i]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

  bool matches(const GridSpec& grid) const {
    return cells_ == grid.cells && values_.size() == grid.total_points();
  }

 private:
  int cells_ = 0;
  std::vector<double> values_;
};

}  // namespace dpm
