#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "galgraph/geometry.hpp"

namespace galgraph {

namespace {
constexpr int kMaxCellsPerAxis = 128;
}

CellList::CellList(std::span<const Vec3> positions, const Box& box, double cell_size_hint)
    : periodic_(box.periodic) {
  if (!(cell_size_hint > 0.0)) throw std::invalid_argument("CellList: cell size must be positive");
  std::array<double, 3> extent{};
  if (periodic_) {
    origin_ = {0.0, 0.0, 0.0};
    extent = {box.side, box.side, box.side};
  } else {
    Vec3 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
            std::numeric_limits<double>::max()};
    Vec3 hi{-lo[0], -lo[1], -lo[2]};
    for (const auto& p : positions)
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], p[a]);
        hi[a] = std::max(hi[a], p[a]);
      }
    if (positions.empty()) lo = hi = {0.0, 0.0, 0.0};
    origin_ = lo;
    for (int a = 0; a < 3; ++a) extent[a] = hi[a] - lo[a];
  }
  for (int a = 0; a < 3; ++a) {
    int d = static_cast<int>(std::floor(extent[a] / cell_size_hint));
    d = std::clamp(d, 1, kMaxCellsPerAxis);
    dims_[a] = d;
    cell_size_[a] = extent[a] > 0.0 ? extent[a] / d : cell_size_hint;
  }

  const std::size_t n_cells = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  std::vector<std::size_t> cell_of_point(positions.size());
  std::vector<std::size_t> counts(n_cells + 1, 0);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto c = cell_of(positions[i]);
    cell_of_point[i] = flat(c[0], c[1], c[2]);
    ++counts[cell_of_point[i] + 1];
  }
  starts_.assign(n_cells + 1, 0);
  for (std::size_t c = 0; c < n_cells; ++c) starts_[c + 1] = starts_[c] + counts[c + 1];
  indices_.resize(positions.size());
  std::vector<std::size_t> cursor(starts_.begin(), starts_.end() - 1);
  for (std::size_t i = 0; i < positions.size(); ++i)
    indices_[cursor[cell_of_point[i]]++] = static_cast<std::uint32_t>(i);
}

std::array<int, 3> CellList::cell_of(const Vec3& p) const {
  std::array<int, 3> c{};
  for (int a = 0; a < 3; ++a) {
    const int v = static_cast<int>(std::floor((p[a] - origin_[a]) / cell_size_[a]));
    c[a] = std::clamp(v, 0, dims_[a] - 1);
  }
  return c;
}

double CellList::min_cell_size() const {
  return std::min({cell_size_[0], cell_size_[1], cell_size_[2]});
}

}  // namespace galgraph
