#include <cmath>
#include <random>
#include <stdexcept>

#include "galgraph/data.hpp"
#include "galgraph/statistics.hpp"

namespace galgraph::data {

namespace {

double wrap(double v, double side) {
  v -= side * std::floor(v / side);
  return v >= side ? 0.0 : v;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_points < 2) throw std::invalid_argument("synthetic: n_points must be at least 2");
  if (!(box_side > 0.0)) throw std::invalid_argument("synthetic: box side must be positive");
  if (!(amplitude >= 0.0 && amplitude <= 1.0)) throw std::invalid_argument("synthetic: amplitude must lie in [0, 1]");
  if (process == Process::NeymanScott) {
    if (n_parents < 1) throw std::invalid_argument("synthetic: need at least one parent");
    if (!(cluster_scale > 0.0 && cluster_scale < box_side / 4))
      throw std::invalid_argument("synthetic: cluster scale must lie in (0, side/4)");
  }
  if (velocities && !(velocity_noise >= 0.0 && infall >= 0.0))
    throw std::invalid_argument("synthetic: velocity scales must be non-negative");
}

SyntheticCloud synthesize_cloud(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(0.0, spec.box_side);
  std::normal_distribution<double> offset(0.0, spec.cluster_scale), noise(0.0, 1.0);
  std::bernoulli_distribution member(spec.process == Process::NeymanScott ? spec.amplitude : 0.0);
  std::vector<Vec3> parents;
  if (spec.process == Process::NeymanScott)
    for (std::size_t p = 0; p < spec.n_parents; ++p) parents.push_back({u(rng), u(rng), u(rng)});
  std::uniform_int_distribution<std::size_t> pick(0, parents.empty() ? 0 : parents.size() - 1);

  SyntheticCloud out;
  out.label = spec.amplitude;
  PointCloud& c = out.cloud;
  c.box = {spec.box_side, true};
  c.positions.resize(spec.n_points);
  if (spec.velocities) c.velocities.resize(spec.n_points);
  for (std::size_t i = 0; i < spec.n_points; ++i) {
    Vec3 v{};
    if (member(rng)) {
      const Vec3& parent = parents[pick(rng)];
      const Vec3 d{offset(rng), offset(rng), offset(rng)};
      c.positions[i] = {wrap(parent[0] + d[0], spec.box_side), wrap(parent[1] + d[1], spec.box_side),
                        wrap(parent[2] + d[2], spec.box_side)};
      v = (-spec.infall) * d;
      ++out.n_clustered;
    } else {
      c.positions[i] = {u(rng), u(rng), u(rng)};
    }
    if (spec.velocities)
      c.velocities[i] = v + Vec3{spec.velocity_noise * noise(rng), spec.velocity_noise * noise(rng),
                                 spec.velocity_noise * noise(rng)};
  }
  return out;
}

Dataset make_synthetic_dataset(const SyntheticDatasetSpec& spec) {
  if (spec.n_clouds == 0) throw std::invalid_argument("synthetic dataset: n_clouds must be positive");
  if (!(spec.amplitude_min >= 0.0 && spec.amplitude_max <= 1.0 && spec.amplitude_min <= spec.amplitude_max))
    throw std::invalid_argument("synthetic dataset: amplitude range must lie in [0, 1]");
  std::mt19937_64 rng(mix(spec.seed));
  std::uniform_real_distribution<double> amp(spec.amplitude_min, spec.amplitude_max);
  const auto edges = default_bin_edges();
  Dataset d;
  for (std::size_t i = 0; i < spec.n_clouds; ++i) {
    SyntheticSpec s = spec.cloud;
    s.amplitude = amp(rng);
    s.seed = mix(spec.seed ^ mix(i));
    SyntheticCloud sc = synthesize_cloud(s);
    Record r;
    r.params = {sc.label};
    if (spec.tpcf) r.tpcf = two_point_correlation(sc.cloud, edges).xi;
    r.cloud = std::move(sc.cloud);
    d.records.push_back(std::move(r));
  }
  DatasetHeader base;
  base.notes = "params: clustering_amplitude\nsource: synthetic neyman-scott\n";
  if (spec.tpcf) base.bin_edges = edges;
  d.header = header_for(d.records, base);
  return d;
}

}  // namespace galgraph::data
