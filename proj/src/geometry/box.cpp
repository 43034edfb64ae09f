#include <cmath>
#include <stdexcept>
#include <string>

#include "galgraph/geometry.hpp"

namespace galgraph {

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

void PointCloud::validate() const {
  if (positions.empty()) throw std::invalid_argument("PointCloud: no points");
  if (!(box.side > 0.0)) throw std::invalid_argument("PointCloud: box side must be positive");
  if (!velocities.empty() && velocities.size() != positions.size())
    throw std::invalid_argument("PointCloud: velocities length does not match positions");
  if (!masses.empty() && masses.size() != positions.size())
    throw std::invalid_argument("PointCloud: masses length does not match positions");
  if (box.periodic) {
    for (std::size_t i = 0; i < positions.size(); ++i)
      for (double c : positions[i])
        if (!(c >= 0.0 && c < box.side))
          throw std::invalid_argument("PointCloud: point " + std::to_string(i) + " outside [0, side)");
  }
}

Vec3 minimum_image(const Vec3& a, const Vec3& b, const Box& box) {
  Vec3 d = a - b;
  if (!box.periodic) return d;
  const double half = 0.5 * box.side;
  for (double& c : d) {
    if (c >= half) c -= box.side;
    else if (c < -half) c += box.side;
  }
  return d;
}

namespace {

struct Moments {
  Vec3 mean{};
  Vec3 std{};
};

Moments moments(const std::vector<Vec3>& v) {
  Moments m;
  const double n = static_cast<double>(v.size());
  for (const auto& p : v)
    for (int a = 0; a < 3; ++a) m.mean[a] += p[a];
  for (int a = 0; a < 3; ++a) m.mean[a] /= n;
  for (const auto& p : v)
    for (int a = 0; a < 3; ++a) m.std[a] += (p[a] - m.mean[a]) * (p[a] - m.mean[a]);
  for (int a = 0; a < 3; ++a) m.std[a] = std::sqrt(m.std[a] / n);
  return m;
}

std::vector<Vec3> apply(const std::vector<Vec3>& v, const Moments& m) {
  std::vector<Vec3> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    for (int a = 0; a < 3; ++a) out[i][a] = (v[i][a] - m.mean[a]) / m.std[a];
  return out;
}

void require_spread(const Moments& m, const char* what) {
  for (int a = 0; a < 3; ++a)
    if (!(m.std[a] > 0.0))
      throw std::invalid_argument(std::string("standardize: zero variance along axis ") + "xyz"[a] + " of " +
                                  what);
}

}  // namespace

std::pair<PointCloud, Standardization> standardize(const PointCloud& cloud) {
  if (cloud.size() < 2) throw std::invalid_argument("standardize: need at least two points");
  Standardization stats;
  PointCloud out;
  const Moments pm = moments(cloud.positions);
  require_spread(pm, "positions");
  stats.mean = pm.mean;
  stats.std = pm.std;
  out.positions = apply(cloud.positions, pm);
  if (cloud.has_velocities()) {
    const Moments vm = moments(cloud.velocities);
    require_spread(vm, "velocities");
    stats.velocity_mean = vm.mean;
    stats.velocity_std = vm.std;
    out.velocities = apply(cloud.velocities, vm);
  }
  out.masses = cloud.masses;
  out.box = Box{cloud.box.side, false};
  return {std::move(out), stats};
}

Vec3 coordinate_scale(const PointCloud& cloud, CoordinateScaling mode) {
  switch (mode) {
    case CoordinateScaling::None:
      return {1.0, 1.0, 1.0};
    case CoordinateScaling::ZScore: {
      const Moments m = moments(cloud.positions);
      require_spread(m, "positions");
      return {1.0 / m.std[0], 1.0 / m.std[1], 1.0 / m.std[2]};
    }
    case CoordinateScaling::Isotropic: {
      const Moments m = moments(cloud.positions);
      const double var = (m.std[0] * m.std[0] + m.std[1] * m.std[1] + m.std[2] * m.std[2]) / 3.0;
      if (!(var > 0.0)) throw std::invalid_argument("coordinate_scale: degenerate cloud");
      const double s = 1.0 / std::sqrt(var);
      return {s, s, s};
    }
  }
  throw std::invalid_argument("coordinate_scale: unknown mode");
}

}  // namespace galgraph
