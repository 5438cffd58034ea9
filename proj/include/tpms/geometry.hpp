#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace tpms {

using Vec3 = std::array<double, 3>;
using Index3 = std::array<int, 3>;

/// Any scalar field that can be sampled pointwise.
using ScalarField = std::function<double(const Vec3&)>;

/// Axis-aligned box [lo, hi].
struct Box {
  Vec3 lo{0.0, 0.0, 0.0};
  Vec3 hi{1.0, 1.0, 1.0};

  static Box cube(double lo, double hi) { return Box{{lo, lo, lo}, {hi, hi, hi}}; }

  double extent(int axis) const { return hi[axis] - lo[axis]; }
  double volume() const { return extent(0) * extent(1) * extent(2); }
  bool degenerate() const {
    return !(extent(0) > 0.0 && extent(1) > 0.0 && extent(2) > 0.0);
  }
};

/// Coordinate of lattice node `i` of `count` evenly spaced nodes spanning
/// [lo, hi] on `axis`, both faces included.
inline double lattice_coordinate(const Box& box, int axis, int i, int count) {
  if (count == 1) return box.lo[axis];
  const double t = static_cast<double>(i) / static_cast<double>(count - 1);
  return i == count - 1 ? box.hi[axis] : box.lo[axis] + t * box.extent(axis);
}

inline std::size_t linear_index(const Index3& dims, int i, int j, int k) {
  return (static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k;
}

inline std::size_t count_of(const Index3& dims) {
  return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
}

inline Index3 unravel(const Index3& dims, std::size_t index) {
  const int k = static_cast<int>(index % dims[2]);
  index /= dims[2];
  const int j = static_cast<int>(index % dims[1]);
  const int i = static_cast<int>(index / dims[1]);
  return {i, j, k};
}

inline std::string to_string(const Vec3& p) {
  return "(" + std::to_string(p[0]) + ", " + std::to_string(p[1]) + ", " + std::to_string(p[2]) + ")";
}

}  // namespace tpms
