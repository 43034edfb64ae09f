#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "galgraph/geometry.hpp"

namespace galgraph {

std::vector<std::uint32_t> farthest_point_sampling_from(std::span<const Vec3> positions, const Box& box,
                                                        std::size_t n_centroids, std::uint32_t start) {
  const std::size_t n = positions.size();
  if (n_centroids < 1 || n_centroids > n)
    throw std::invalid_argument("farthest_point_sampling: need 1 <= n_centroids <= N");
  if (start >= n) throw std::invalid_argument("farthest_point_sampling: start index out of range");
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> chosen;
  chosen.reserve(n_centroids);
  std::uint32_t current = start;
  for (std::size_t c = 0; c < n_centroids; ++c) {
    chosen.push_back(current);
    min_d2[current] = -1.0;  // never picked again
    std::uint32_t best = 0;
    double best_d2 = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (min_d2[j] < 0.0) continue;
      min_d2[j] = std::min(min_d2[j], squared_distance(positions[j], positions[current], box));
      if (min_d2[j] > best_d2) {
        best_d2 = min_d2[j];
        best = static_cast<std::uint32_t>(j);
      }
    }
    current = best;
  }
  return chosen;
}

std::vector<std::uint32_t> farthest_point_sampling(std::span<const Vec3> positions, const Box& box,
                                                   std::size_t n_centroids, std::uint64_t seed) {
  if (positions.empty()) throw std::invalid_argument("farthest_point_sampling: empty input");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(positions.size() - 1));
  return farthest_point_sampling_from(positions, box, n_centroids, pick(rng));
}

Matrix assignment_matrix(std::span<const Vec3> positions, std::span<const Vec3> centroids, const Box& box) {
  if (centroids.empty()) throw std::invalid_argument("assignment_matrix: need at least one centroid");
  const std::size_t n = positions.size(), m = centroids.size();
  Matrix s(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      s(i, j) = std::sqrt(squared_distance(positions[i], centroids[j], box));
      dmin = std::min(dmin, s(i, j));
    }
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      s(i, j) = std::exp(dmin - s(i, j));
      total += s(i, j);
    }
    for (std::size_t j = 0; j < m; ++j) s(i, j) /= total;
  }
  return s;
}

}  // namespace galgraph
