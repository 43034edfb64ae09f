#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "galgraph/parallel.hpp"
#include "galgraph/statistics.hpp"

namespace galgraph {

namespace {

void check_edges(std::span<const double> edges) {
  if (edges.size() < 2) throw std::invalid_argument("tpcf: need at least two bin edges");
  if (!(edges[0] >= 0.0)) throw std::invalid_argument("tpcf: bin edges must be non-negative");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw std::invalid_argument("tpcf: bin edges must be strictly increasing");
}

// Bins are compared in squared distance so that every counting path makes
// the same floating-point decisions.
struct Binner {
  explicit Binner(std::span<const double> edges) {
    sq.reserve(edges.size());
    for (double e : edges) sq.push_back(e * e);
  }
  void add(double d2, std::uint64_t* counts) const {
    if (d2 < sq.front() || d2 >= sq.back()) return;
    const auto it = std::upper_bound(sq.begin(), sq.end(), d2);
    ++counts[static_cast<std::size_t>(it - sq.begin()) - 1];
  }
  double max_sq() const { return sq.back(); }
  std::vector<double> sq;
};

void count_cell_pairs(const CellList& cells, std::span<const Vec3> pos, const Box& box, const Binner& bins,
                      std::size_t cell, std::uint64_t* counts) {
  const auto dims = cells.dims();
  const int cx = static_cast<int>(cell / (static_cast<std::size_t>(dims[1]) * dims[2]));
  const int cy = static_cast<int>(cell / dims[2] % dims[1]);
  const int cz = static_cast<int>(cell % dims[2]);
  std::vector<std::size_t> nbrs;
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dz = -1; dz <= 1; ++dz) {
        const std::array<int, 3> c{cx + dx, cy + dy, cz + dz};
        std::array<int, 3> w{};
        bool inside = true;
        for (int a = 0; a < 3; ++a) {
          if (cells.periodic())
            w[a] = ((c[a] % dims[a]) + dims[a]) % dims[a];
          else if (c[a] < 0 || c[a] >= dims[a])
            inside = false;
          else
            w[a] = c[a];
        }
        if (!inside) continue;
        const std::size_t f = cells.flat(w[0], w[1], w[2]);
        if (f >= cell) nbrs.push_back(f);
      }
  std::sort(nbrs.begin(), nbrs.end());
  nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  const auto own = cells.bucket(cell);
  for (std::size_t f : nbrs) {
    const auto other = cells.bucket(f);
    for (std::size_t a = 0; a < own.size(); ++a) {
      const std::size_t b0 = f == cell ? a + 1 : 0;
      for (std::size_t b = b0; b < other.size(); ++b) bins.add(squared_distance(pos[own[a]], pos[other[b]], box), counts);
    }
  }
}

CellList pair_cells(std::span<const Vec3> positions, const Box& box, std::span<const double> edges) {
  check_edges(edges);
  if (box.periodic && edges.back() >= box.side / 2)
    throw std::invalid_argument("pair counts: largest bin edge must be below half the box side");
  return CellList(positions, box, edges.back());
}

}  // namespace

std::vector<double> TpcfVector::centers() const {
  std::vector<double> c(xi.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::sqrt(bin_edges[i] * bin_edges[i + 1]);
  return c;
}

std::vector<double> TpcfVector::null_sigma() const {
  std::vector<double> s(random_counts.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = random_counts[i] > 0 ? 1.0 / std::sqrt(random_counts[i]) : 0.0;
  return s;
}

std::vector<double> TpcfVector::sigma() const {
  if (pair_counts.size() != random_counts.size()) throw std::logic_error("TpcfVector::sigma: no pair counts");
  std::vector<double> s(random_counts.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double rr = random_counts[i];
    s[i] = rr > 0 ? std::sqrt(std::max(static_cast<double>(pair_counts[i]), rr)) / rr : 0.0;
  }
  return s;
}

void TpcfVector::validate() const {
  check_edges(bin_edges);
  if (xi.size() + 1 != bin_edges.size()) throw std::invalid_argument("TpcfVector: need one more edge than bins");
  if (!pair_counts.empty() && pair_counts.size() != xi.size())
    throw std::invalid_argument("TpcfVector: pair_counts length mismatch");
  for (double v : xi)
    if (!(v >= -1.0)) throw std::invalid_argument("TpcfVector: xi below -1");
}

std::vector<double> log_bin_edges(std::size_t n, double lo, double hi) {
  if (n == 0 || !(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("log_bin_edges: need n > 0 and 0 < lo < hi");
  std::vector<double> e(n + 1);
  const double step = std::log(hi / lo) / static_cast<double>(n);
  for (std::size_t i = 0; i <= n; ++i) e[i] = lo * std::exp(step * static_cast<double>(i));
  e.front() = lo;
  e.back() = hi;
  return e;
}

std::vector<double> default_bin_edges() { return log_bin_edges(24, 0.5, 150.0); }

namespace kernels {

std::vector<std::uint64_t> pair_counts_brute_force(std::span<const Vec3> positions, const Box& box,
                                                   std::span<const double> edges) {
  check_edges(edges);
  const Binner bins(edges);
  std::vector<std::uint64_t> counts(edges.size() - 1, 0);
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = i + 1; j < positions.size(); ++j)
      bins.add(squared_distance(positions[i], positions[j], box), counts.data());
  return counts;
}

namespace serial {
std::vector<std::uint64_t> pair_counts_cells(std::span<const Vec3> positions, const Box& box,
                                             std::span<const double> edges) {
  const CellList cells = pair_cells(positions, box, edges);
  const Binner bins(edges);
  std::vector<std::uint64_t> counts(edges.size() - 1, 0);
  for (std::size_t c = 0; c < cells.n_cells(); ++c) count_cell_pairs(cells, positions, box, bins, c, counts.data());
  return counts;
}
}  // namespace serial

namespace omp {
std::vector<std::uint64_t> pair_counts_cells(std::span<const Vec3> positions, const Box& box,
                                             std::span<const double> edges) {
  const CellList cells = pair_cells(positions, box, edges);
  const Binner bins(edges);
  const std::size_t n_bins = edges.size() - 1;
  const int threads = max_threads();
  std::vector<std::uint64_t> local(static_cast<std::size_t>(threads) * n_bins, 0);
  const auto n_cells = static_cast<std::ptrdiff_t>(cells.n_cells());
  GALGRAPH_PARALLEL_FOR_DYNAMIC
  for (std::ptrdiff_t c = 0; c < n_cells; ++c)
    count_cell_pairs(cells, positions, box, bins, static_cast<std::size_t>(c),
                     local.data() + static_cast<std::size_t>(thread_id()) * n_bins);
  // Integer tallies: the merge order does not affect the result.
  std::vector<std::uint64_t> counts(n_bins, 0);
  for (int t = 0; t < threads; ++t)
    for (std::size_t b = 0; b < n_bins; ++b) counts[b] += local[static_cast<std::size_t>(t) * n_bins + b];
  return counts;
}
}  // namespace omp

std::vector<std::uint64_t> pair_counts_cells(std::span<const Vec3> positions, const Box& box,
                                             std::span<const double> edges) {
  if (openmp_enabled() && max_threads() > 1 && positions.size() >= 2000)
    return omp::pair_counts_cells(positions, box, edges);
  return serial::pair_counts_cells(positions, box, edges);
}

}  // namespace kernels

TpcfVector two_point_correlation(const PointCloud& cloud, std::span<const double> edges, bool use_cells) {
  check_edges(edges);
  if (!cloud.box.periodic) throw std::invalid_argument("two_point_correlation: needs a periodic box");
  const double side = cloud.box.side;
  if (edges.back() >= side / 2)
    throw std::invalid_argument("two_point_correlation: largest edge " + std::to_string(edges.back()) +
                                " must be below half the box side (" + std::to_string(side / 2) + ")");
  if (cloud.size() < 2) throw std::invalid_argument("two_point_correlation: need at least two points");
  TpcfVector t;
  t.bin_edges.assign(edges.begin(), edges.end());
  t.pair_counts = use_cells ? kernels::pair_counts_cells(cloud.positions, cloud.box, edges)
                            : kernels::pair_counts_brute_force(cloud.positions, cloud.box, edges);
  const double n = static_cast<double>(cloud.size());
  const double pairs = n * (n - 1) / 2;
  const double volume = side * side * side;
  t.xi.resize(t.pair_counts.size());
  t.random_counts.resize(t.pair_counts.size());
  for (std::size_t i = 0; i < t.xi.size(); ++i) {
    const double shell = 4.0 / 3.0 * std::numbers::pi * (std::pow(edges[i + 1], 3) - std::pow(edges[i], 3));
    t.random_counts[i] = pairs * shell / volume;
    t.xi[i] = static_cast<double>(t.pair_counts[i]) / t.random_counts[i] - 1.0;
  }
  return t;
}

TpcfVector two_point_correlation(const PointCloud& cloud) {
  const auto e = default_bin_edges();
  return two_point_correlation(cloud, e);
}

std::vector<std::size_t> tpcf_slice_indices(std::span<const double> edges, TpcfContext mode) {
  check_edges(edges);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double c = std::sqrt(edges[i] * edges[i + 1]);
    const bool keep = mode == TpcfContext::Full || (mode == TpcfContext::Small && c < kSmallScaleMax) ||
                      (mode == TpcfContext::Large && c > kLargeScaleMin);
    if (keep) idx.push_back(i);
  }
  if (mode == TpcfContext::None) throw std::invalid_argument("tpcf_slice: mode none selects nothing");
  if (idx.empty()) throw std::invalid_argument("tpcf_slice: no bin centre falls in the requested range");
  return idx;
}

TpcfSlice tpcf_slice(const TpcfVector& t, TpcfContext mode) {
  TpcfSlice s;
  s.indices = tpcf_slice_indices(t.bin_edges, mode);
  for (auto i : s.indices) s.values.push_back(t.xi[i]);
  return s;
}

std::vector<double> tpcf_slice(std::span<const double> xi, std::span<const double> edges, TpcfContext mode) {
  if (xi.size() + 1 != edges.size()) throw std::invalid_argument("tpcf_slice: need one more edge than values");
  std::vector<double> out;
  for (auto i : tpcf_slice_indices(edges, mode)) out.push_back(xi[i]);
  return out;
}

nn::MlpSpec tpcf_mlp_spec(std::size_t n_bins, std::size_t hidden, int hidden_layers, std::size_t n_targets) {
  nn::MlpSpec s{{n_bins}, false};
  for (int l = 0; l < hidden_layers; ++l) s.widths.push_back(hidden);
  s.widths.push_back(n_targets);
  return s;
}

void tpcf_mlp_init(nn::ParameterStore& store, const nn::MlpSpec& spec, std::mt19937_64& rng) {
  nn::mlp_init(store, kTpcfMlpPrefix, spec, rng);
}

ad::Var tpcf_mlp_baseline(const nn::Binding& p, const nn::MlpSpec& spec, ad::Var xi) {
  return nn::mlp_forward(spec, p, kTpcfMlpPrefix, xi);
}

}  // namespace galgraph
