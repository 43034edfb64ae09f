#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "galgraph/matrix.hpp"

namespace galgraph {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a);

/// Cubic simulation box. With `periodic == false` displacements are plain
/// differences and `side` only bounds the cell grid.
struct Box {
  double side = 1.0;
  bool periodic = true;
};

struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;  // empty or same length as positions
  std::vector<double> masses;    // empty or same length as positions
  Box box;

  std::size_t size() const { return positions.size(); }
  bool has_velocities() const { return !velocities.empty(); }
  bool has_masses() const { return !masses.empty(); }
  /// Throws if the cloud violates its invariants (lengths, coordinate range).
  void validate() const;
};

struct Standardization {
  Vec3 mean{};
  Vec3 std{};
  Vec3 velocity_mean{};
  Vec3 velocity_std{};
};

/// Per-axis Z-scoring of positions (and, separately, velocities).
/// The returned cloud is flagged non-periodic: its box is no longer cubic.
std::pair<PointCloud, Standardization> standardize(const PointCloud& cloud);

/// Displacement a - b under the minimum-image convention. Components land in
/// [-side/2, side/2).
Vec3 minimum_image(const Vec3& a, const Vec3& b, const Box& box);

inline double squared_distance(const Vec3& a, const Vec3& b, const Box& box) {
  const Vec3 d = minimum_image(a, b, box);
  return dot(d, d);
}

/// Directed kNN graph. Edge e carries a message from senders[e] (j) to
/// receivers[e] (i); edges are sorted by (receiver, distance, sender) and every
/// node receives exactly k edges.
struct Graph {
  std::size_t n_nodes = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> senders;
  std::vector<std::uint32_t> receivers;
  std::vector<Vec3> displacements;  // r_ij = x_i - x_j (minimum image)
  std::vector<double> distances;    // |r_ij|
  Matrix radial_embedding;          // E x n_rbf, filled by embed_edges
  Matrix node_features;             // N x d, optional
  std::vector<double> global_context;

  std::size_t n_edges() const { return senders.size(); }
};

/// Uniform grid of buckets over the box, used for kNN and pair counting.
class CellList {
 public:
  /// `cell_size_hint` is a lower bound on the cell edge length. Periodic boxes
  /// get side/floor(side/hint) cells; open boxes cover the bounding box.
  CellList(std::span<const Vec3> positions, const Box& box, double cell_size_hint);

  int dim(int axis) const { return dims_[axis]; }
  std::array<int, 3> dims() const { return dims_; }
  double cell_size(int axis) const { return cell_size_[axis]; }
  double min_cell_size() const;
  std::size_t n_cells() const { return starts_.size() - 1; }
  std::array<int, 3> cell_of(const Vec3& p) const;
  std::size_t flat(int cx, int cy, int cz) const {
    return (static_cast<std::size_t>(cx) * dims_[1] + cy) * dims_[2] + cz;
  }
  std::span<const std::uint32_t> bucket(std::size_t cell) const {
    return {indices_.data() + starts_[cell], starts_[cell + 1] - starts_[cell]};
  }
  bool periodic() const { return periodic_; }
  std::size_t n_points() const { return indices_.size(); }

 private:
  std::array<int, 3> dims_{1, 1, 1};
  std::array<double, 3> cell_size_{1, 1, 1};
  Vec3 origin_{};
  bool periodic_ = true;
  std::vector<std::size_t> starts_;
  std::vector<std::uint32_t> indices_;
};

/// Neighbor lists shared by the kNN kernels: row i holds the k nearest
/// (index, squared distance) pairs of point i sorted by (distance, index).
struct NeighborTable {
  std::size_t k = 0;
  std::vector<std::uint32_t> index;
  std::vector<double> squared_distance;
};

namespace kernels {
NeighborTable knn_brute_force(std::span<const Vec3> positions, const Box& box, std::size_t k);
namespace serial {
NeighborTable knn_cells(std::span<const Vec3> positions, const Box& box, std::size_t k);
}
namespace omp {
NeighborTable knn_cells(std::span<const Vec3> positions, const Box& box, std::size_t k);
}
NeighborTable knn_cells(std::span<const Vec3> positions, const Box& box, std::size_t k);
}  // namespace kernels

/// Cell size aimed at holding about k neighbors within one ring of cells.
double knn_cell_size_estimate(std::size_t n_points, double volume, std::size_t k);

Graph knn_graph(std::span<const Vec3> positions, const Box& box, std::size_t k, bool use_cells = true);
Graph knn_graph(const PointCloud& cloud, std::size_t k, bool use_cells = true);

/// Bessel radial basis: sqrt(2/c) sin(m pi r / c) / r for m = 1..n, with the
/// r -> 0 limit sqrt(2/c) m pi / c.
std::vector<double> bessel_basis(double r, std::size_t n, double cutoff);

/// Per-axis scaling applied to displacements before they reach a model.
/// `ZScore` divides each axis by the cloud's std, `Isotropic` by a single
/// rotation-invariant scale, `None` leaves them untouched.
enum class CoordinateScaling { ZScore, Isotropic, None };
Vec3 coordinate_scale(const PointCloud& cloud, CoordinateScaling mode);

/// Displacements multiplied axis-wise by `scale` (model coordinates).
std::vector<Vec3> scaled_displacements(const Graph& graph, const Vec3& scale);

/// Fill `graph.radial_embedding` with the Bessel basis of the squared scaled
/// edge length, the convention every model uses for R_ij.
void embed_edges(Graph& graph, const Vec3& scale, std::size_t n_rbf, double cutoff);

std::vector<std::uint32_t> farthest_point_sampling_from(std::span<const Vec3> positions, const Box& box,
                                                        std::size_t n_centroids, std::uint32_t start);
/// Start index drawn uniformly from `seed`.
std::vector<std::uint32_t> farthest_point_sampling(std::span<const Vec3> positions, const Box& box,
                                                   std::size_t n_centroids, std::uint64_t seed);

/// Row-wise softmax of negative minimum-image distances to each centroid.
Matrix assignment_matrix(std::span<const Vec3> positions, std::span<const Vec3> centroids, const Box& box);

}  // namespace galgraph
