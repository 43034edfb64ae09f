#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "galgraph/geometry.hpp"
#include "galgraph/harmonics.hpp"

namespace galgraph::testing {

inline std::vector<Vec3> uniform_points(std::size_t n, double side, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, side);
  std::vector<Vec3> p(n);
  for (auto& x : p) x = {u(rng), u(rng), u(rng)};
  return p;
}

inline std::vector<Vec3> gaussian_points(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<Vec3> p(n);
  for (auto& x : p) x = {g(rng), g(rng), g(rng)};
  return p;
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v{g(rng), g(rng), g(rng)};
  const double n = norm(v);
  return {v[0] / n, v[1] / n, v[2] / n};
}

/// Uniform proper rotation from a random unit quaternion.
inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  double w = g(rng), x = g(rng), y = g(rng), z = g(rng);
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n, x /= n, y /= n, z /= n;
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
           {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
           {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
}

/// Random element of O(3): a rotation, composed with inversion half the time.
inline Mat3 random_orthogonal(std::mt19937_64& rng, bool reflect) {
  Mat3 r = random_rotation(rng);
  if (reflect)
    for (auto& row : r)
      for (double& v : row) v = -v;
  return r;
}

inline Vec3 apply(const Mat3& r, const Vec3& v) {
  return {r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2], r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
          r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2]};
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace galgraph::testing
