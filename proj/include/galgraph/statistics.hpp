#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "galgraph/config.hpp"
#include "galgraph/geometry.hpp"
#include "galgraph/nn.hpp"

namespace galgraph {

/// Binned two-point correlation function. Bin i covers [edges[i], edges[i+1]).
struct TpcfVector {
  std::vector<double> xi;
  std::vector<double> bin_edges;
  std::vector<std::uint64_t> pair_counts;
  std::vector<double> random_counts;  // expected pairs per bin for a uniform cloud

  std::size_t size() const { return xi.size(); }
  /// Geometric mean of each bin's edges.
  std::vector<double> centers() const;
  /// Poisson standard deviation of xi under the uniform null, sqrt(RR)/RR.
  std::vector<double> null_sigma() const;
  /// Poisson error sqrt(DD)/RR, floored by the null value where DD < RR.
  std::vector<double> sigma() const;
  void validate() const;
};

/// `n` logarithmically spaced bins over [lo, hi]; returns n + 1 edges.
std::vector<double> log_bin_edges(std::size_t n, double lo, double hi);
/// 24 log bins over [0.5, 150].
std::vector<double> default_bin_edges();

namespace kernels {
// Unordered minimum-image pair counts per bin. All variants agree exactly.
std::vector<std::uint64_t> pair_counts_brute_force(std::span<const Vec3> positions, const Box& box,
                                                   std::span<const double> edges);
namespace serial {
std::vector<std::uint64_t> pair_counts_cells(std::span<const Vec3> positions, const Box& box,
                                             std::span<const double> edges);
}
namespace omp {
std::vector<std::uint64_t> pair_counts_cells(std::span<const Vec3> positions, const Box& box,
                                             std::span<const double> edges);
}
std::vector<std::uint64_t> pair_counts_cells(std::span<const Vec3> positions, const Box& box,
                                             std::span<const double> edges);
}  // namespace kernels

/// Natural estimator DD/RR - 1 with analytic RR for a periodic box. Needs
/// the largest edge below side/2.
TpcfVector two_point_correlation(const PointCloud& cloud, std::span<const double> edges, bool use_cells = true);
TpcfVector two_point_correlation(const PointCloud& cloud);

struct TpcfSlice {
  std::vector<double> values;
  std::vector<std::size_t> indices;
};

inline constexpr double kSmallScaleMax = 30.0;
inline constexpr double kLargeScaleMin = 80.0;

/// Bins used by a context mode: all for Full, centers below 30 for Small,
/// centers above 80 for Large. Throws if the selection is empty.
std::vector<std::size_t> tpcf_slice_indices(std::span<const double> edges, TpcfContext mode);
TpcfSlice tpcf_slice(const TpcfVector& t, TpcfContext mode);
std::vector<double> tpcf_slice(std::span<const double> xi, std::span<const double> edges, TpcfContext mode);

/// MLP on xi: n_bins -> 128 x 3 (GELU) -> n_targets.
nn::MlpSpec tpcf_mlp_spec(std::size_t n_bins = 24, std::size_t hidden = 128, int hidden_layers = 3,
                          std::size_t n_targets = 2);
inline constexpr const char* kTpcfMlpPrefix = "tpcf_mlp";
void tpcf_mlp_init(nn::ParameterStore& store, const nn::MlpSpec& spec, std::mt19937_64& rng);
/// Input: rows of standardized xi.
ad::Var tpcf_mlp_baseline(const nn::Binding& p, const nn::MlpSpec& spec, ad::Var xi);

}  // namespace galgraph
