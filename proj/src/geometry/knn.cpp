#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "galgraph/geometry.hpp"
#include "galgraph/parallel.hpp"

namespace galgraph {

namespace {

struct Candidate {
  double d2;
  std::uint32_t index;
  bool operator<(const Candidate& o) const { return d2 < o.d2 || (d2 == o.d2 && index < o.index); }
};

void check_k(std::size_t n, std::size_t k) {
  if (k < 1) throw std::invalid_argument("knn: k must be at least 1");
  if (k >= n)
    throw std::invalid_argument("knn: k = " + std::to_string(k) + " requires more than k points (N = " +
                                std::to_string(n) + ")");
}

// Bounded max-heap on (d2, index): keeps the k lexicographically smallest.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k + 1); }
  void offer(double d2, std::uint32_t idx) {
    const Candidate c{d2, idx};
    if (heap_.size() < k_) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end());
    } else if (c < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end());
    }
  }
  bool full() const { return heap_.size() == k_; }
  double worst() const { return heap_.front().d2; }
  void write(std::uint32_t* idx, double* d2) {
    std::sort_heap(heap_.begin(), heap_.end());
    for (std::size_t t = 0; t < heap_.size(); ++t) {
      idx[t] = heap_[t].index;
      d2[t] = heap_[t].d2;
    }
  }

 private:
  std::size_t k_;
  std::vector<Candidate> heap_;
};

// Cells along one axis ordered by their ring distance from cell `c`.
struct AxisRing {
  std::vector<int> cell;
  std::vector<int> ring;
  int max_ring = 0;
  // number of cells with ring <= r
  std::size_t upto(int r) const {
    return static_cast<std::size_t>(std::upper_bound(ring.begin(), ring.end(), r) - ring.begin());
  }
};

void axis_rings(int c, int dim, bool periodic, AxisRing& out) {
  out.cell.clear();
  out.ring.clear();
  std::vector<std::pair<int, int>> tmp;
  tmp.reserve(dim);
  for (int x = 0; x < dim; ++x) {
    int off = std::abs(x - c);
    if (periodic) off = std::min(off, dim - off);
    tmp.emplace_back(off, x);
  }
  std::sort(tmp.begin(), tmp.end());
  for (auto [r, x] : tmp) {
    out.ring.push_back(r);
    out.cell.push_back(x);
  }
  out.max_ring = out.ring.back();
}

void query_cells(const CellList& cells, std::span<const Vec3> positions, const Box& box, std::size_t k,
                 std::size_t i, std::uint32_t* out_idx, double* out_d2) {
  const Vec3& p = positions[i];
  const auto c = cells.cell_of(p);
  std::array<AxisRing, 3> ring;
  for (int a = 0; a < 3; ++a) axis_rings(c[a], cells.dim(a), cells.periodic(), ring[a]);
  const int overall_max = std::max({ring[0].max_ring, ring[1].max_ring, ring[2].max_ring});
  const double cs = cells.min_cell_size();

  TopK top(k);
  for (int r = 0; r <= overall_max; ++r) {
    const std::size_t nx = ring[0].upto(r), ny = ring[1].upto(r), nz = ring[2].upto(r);
    for (std::size_t ix = 0; ix < nx; ++ix) {
      for (std::size_t iy = 0; iy < ny; ++iy) {
        for (std::size_t iz = 0; iz < nz; ++iz) {
          if (std::max({ring[0].ring[ix], ring[1].ring[iy], ring[2].ring[iz]}) != r) continue;
          for (std::uint32_t j : cells.bucket(cells.flat(ring[0].cell[ix], ring[1].cell[iy], ring[2].cell[iz]))) {
            if (j == i) continue;
            top.offer(squared_distance(p, positions[j], box), j);
          }
        }
      }
    }
    if (!top.full()) continue;
    // Every unscanned point lies at least r cell widths away along some axis
    // that is not yet exhausted.
    bool exhausted = true;
    for (int a = 0; a < 3; ++a) exhausted = exhausted && r >= ring[a].max_ring;
    if (exhausted) break;
    const double reach = r * cs * (1.0 - 1e-12);
    if (top.worst() < reach * reach) break;
  }
  top.write(out_idx, out_d2);
}

NeighborTable allocate(std::size_t n, std::size_t k) {
  NeighborTable t;
  t.k = k;
  t.index.resize(n * k);
  t.squared_distance.resize(n * k);
  return t;
}

double box_volume(std::span<const Vec3> positions, const Box& box) {
  if (box.periodic) return box.side * box.side * box.side;
  Vec3 lo = positions[0], hi = positions[0];
  for (const auto& p : positions)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  double v = 1.0;
  for (int a = 0; a < 3; ++a) v *= std::max(hi[a] - lo[a], 1e-12);
  return v;
}

}  // namespace

double knn_cell_size_estimate(std::size_t n_points, double volume, std::size_t k) {
  const double density = static_cast<double>(n_points) / volume;
  return std::cbrt(3.0 * static_cast<double>(k) / (4.0 * std::numbers::pi * density));
}

namespace kernels {

NeighborTable knn_brute_force(std::span<const Vec3> positions, const Box& box, std::size_t k) {
  const std::size_t n = positions.size();
  check_k(n, k);
  NeighborTable t = allocate(n, k);
  std::vector<Candidate> all;
  all.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    all.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) all.push_back({squared_distance(positions[i], positions[j], box), static_cast<std::uint32_t>(j)});
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    for (std::size_t t2 = 0; t2 < k; ++t2) {
      t.index[i * k + t2] = all[t2].index;
      t.squared_distance[i * k + t2] = all[t2].d2;
    }
  }
  return t;
}

namespace serial {
NeighborTable knn_cells(std::span<const Vec3> positions, const Box& box, std::size_t k) {
  const std::size_t n = positions.size();
  check_k(n, k);
  const CellList cells(positions, box, knn_cell_size_estimate(n, box_volume(positions, box), k));
  NeighborTable t = allocate(n, k);
  for (std::size_t i = 0; i < n; ++i)
    query_cells(cells, positions, box, k, i, t.index.data() + i * k, t.squared_distance.data() + i * k);
  return t;
}
}  // namespace serial

namespace omp {
NeighborTable knn_cells(std::span<const Vec3> positions, const Box& box, std::size_t k) {
  const std::size_t n = positions.size();
  check_k(n, k);
  const CellList cells(positions, box, knn_cell_size_estimate(n, box_volume(positions, box), k));
  NeighborTable t = allocate(n, k);
  const auto count = static_cast<std::ptrdiff_t>(n);
  GALGRAPH_PARALLEL_FOR_DYNAMIC
  for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    query_cells(cells, positions, box, k, i, t.index.data() + i * k, t.squared_distance.data() + i * k);
  }
  return t;
}
}  // namespace omp

NeighborTable knn_cells(std::span<const Vec3> positions, const Box& box, std::size_t k) {
  if (openmp_enabled() && max_threads() > 1 && positions.size() >= 512) return omp::knn_cells(positions, box, k);
  return serial::knn_cells(positions, box, k);
}

}  // namespace kernels

Graph knn_graph(std::span<const Vec3> positions, const Box& box, std::size_t k, bool use_cells) {
  const NeighborTable table =
      use_cells ? kernels::knn_cells(positions, box, k) : kernels::knn_brute_force(positions, box, k);
  const std::size_t n = positions.size();
  Graph g;
  g.n_nodes = n;
  g.k = k;
  g.senders.resize(n * k);
  g.receivers.resize(n * k);
  g.displacements.resize(n * k);
  g.distances.resize(n * k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < k; ++t) {
      const std::size_t e = i * k + t;
      const std::uint32_t j = table.index[e];
      g.receivers[e] = static_cast<std::uint32_t>(i);
      g.senders[e] = j;
      g.displacements[e] = minimum_image(positions[i], positions[j], box);
      g.distances[e] = std::sqrt(table.squared_distance[e]);
    }
  return g;
}

Graph knn_graph(const PointCloud& cloud, std::size_t k, bool use_cells) {
  return knn_graph(cloud.positions, cloud.box, k, use_cells);
}

}  // namespace galgraph
