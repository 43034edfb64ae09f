#include <cmath>
#include <stdexcept>
#include <string>

#include "architectures.hpp"

namespace galgraph {

Matrix standardized_velocities(const PointCloud& cloud, CoordinateScaling mode) {
  const std::size_t n = cloud.velocities.size();
  Matrix v(n, 3, 0.0);
  if (n == 0) return v;
  Vec3 mean{}, var{};
  for (const auto& x : cloud.velocities)
    for (int a = 0; a < 3; ++a) mean[a] += x[a] / static_cast<double>(n);
  for (const auto& x : cloud.velocities)
    for (int a = 0; a < 3; ++a) var[a] += (x[a] - mean[a]) * (x[a] - mean[a]) / static_cast<double>(n);
  Vec3 s{1.0, 1.0, 1.0};
  if (mode == CoordinateScaling::ZScore) {
    for (int a = 0; a < 3; ++a) s[a] = var[a] > 0.0 ? 1.0 / std::sqrt(var[a]) : 1.0;
  } else if (mode == CoordinateScaling::Isotropic) {
    const double m = (var[0] + var[1] + var[2]) / 3.0;
    s = (m > 0.0 ? 1.0 / std::sqrt(m) : 1.0) * Vec3{1.0, 1.0, 1.0};
  }
  const bool centre = mode != CoordinateScaling::None;
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) v(i, a) = (cloud.velocities[i][a] - (centre ? mean[a] : 0.0)) * s[a];
  return v;
}

ModelInput prepare_input(const PointCloud& cloud, const ModelConfig& config, std::vector<double> context) {
  ModelInput in;
  in.cloud = cloud;
  in.context = std::move(context);
  if (!config.uses_graph()) return in;
  in.graph = knn_graph(cloud, static_cast<std::size_t>(config.k));
  in.scale = coordinate_scale(cloud, config.coordinate_scaling);
  embed_edges(in.graph, in.scale, static_cast<std::size_t>(config.n_radial_basis), config.radial_cutoff);
  const auto d = scaled_displacements(in.graph, in.scale);
  in.edge_vectors = Matrix(d.size(), 3);
  for (std::size_t e = 0; e < d.size(); ++e)
    for (int a = 0; a < 3; ++a) in.edge_vectors(e, a) = d[e][a];
  if (config.steerable()) {
    const int lmax = config.l_max;
    const std::size_t dim = static_cast<std::size_t>((lmax + 1) * (lmax + 1));
    in.edge_sh = Matrix(d.size(), dim, 0.0);
    for (std::size_t e = 0; e < d.size(); ++e) {
      const double r = norm(d[e]);
      if (r == 0.0) {
        // Coincident points have no direction; only the invariant part survives.
        in.edge_sh(e, 0) = 0.5 / std::sqrt(std::numbers::pi);
        continue;
      }
      spherical_harmonics_into((1.0 / r) * d[e], lmax, &in.edge_sh(e, 0));
    }
  }
  if (config.use_velocities) {
    if (!cloud.has_velocities()) throw std::invalid_argument("use_velocities is set but the cloud has no velocities");
    in.velocities = standardized_velocities(cloud, config.coordinate_scaling);
  }
  return in;
}

Irreps hidden_irreps(const ModelConfig& c) {
  std::vector<MulIrrep> items{{c.d_hidden, 0, 1}};
  for (int l = 1; l <= c.l_max; ++l) items.push_back({c.steerable_channels(), l, l % 2 ? -1 : 1});
  return Irreps(items);
}

Irreps node_input_irreps(const ModelConfig& c) {
  std::vector<MulIrrep> items{{1, 0, 1}};
  if (c.use_velocities) {
    if (c.velocities_as_steerable)
      items.push_back({1, 1, -1});
    else
      items.push_back({3, 0, 1});
  }
  return Irreps(items);
}

std::size_t node_input_width(const ModelConfig& c) { return c.use_velocities ? 4 : 1; }

Matrix node_inputs(const ModelInput& in, const ModelConfig& c) {
  const std::size_t n = in.n_nodes();
  Matrix x(n, node_input_width(c), 1.0);
  if (c.use_velocities) {
    if (in.velocities.rows() != n) throw std::invalid_argument("node_inputs: velocities missing from the input");
    const bool slots = c.steerable() && c.velocities_as_steerable;
    for (std::size_t i = 0; i < n; ++i)
      for (int a = 0; a < 3; ++a) x(i, 1 + (slots ? kVectorSlot[a] : a)) = in.velocities(i, a);
  }
  return x;
}

ad::Var aggregate(ad::Var edges, const ad::Index& receivers, std::size_t n_nodes, Aggregation agg) {
  switch (agg) {
    case Aggregation::Sum: return ad::segment_sum(edges, receivers, n_nodes);
    case Aggregation::Mean: return ad::segment_mean(edges, receivers, n_nodes);
    case Aggregation::Max: return ad::segment_max(edges, receivers, n_nodes);
  }
  throw std::logic_error("aggregate: unknown mode");
}

ad::Var pool_nodes(ad::Var nodes, Aggregation agg) {
  return aggregate(nodes, ad::Index(nodes.rows(), 0), 1, agg);
}

Matrix pointnet_assignment(const ModelInput& in, const std::vector<std::uint32_t>& centroids) {
  const auto& pos = in.cloud.positions;
  Matrix s(pos.size(), centroids.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    double dmin = 1e300;
    for (std::size_t j = 0; j < centroids.size(); ++j) {
      const Vec3 d = minimum_image(pos[i], pos[centroids[j]], in.cloud.box);
      const Vec3 sd{d[0] * in.scale[0], d[1] * in.scale[1], d[2] * in.scale[2]};
      s(i, j) = norm(sd);
      dmin = std::min(dmin, s(i, j));
    }
    double total = 0.0;
    for (std::size_t j = 0; j < centroids.size(); ++j) total += (s(i, j) = std::exp(dmin - s(i, j)));
    for (std::size_t j = 0; j < centroids.size(); ++j) s(i, j) /= total;
  }
  return s;
}

ad::Var pointnet_pool(ad::Var nodes, const Matrix& assignment) {
  if (assignment.rows() != nodes.rows()) throw std::invalid_argument("pointnet_pool: assignment rows != nodes");
  Matrix w(assignment.cols(), assignment.rows());
  for (std::size_t j = 0; j < assignment.cols(); ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < assignment.rows(); ++i) col += assignment(i, j);
    for (std::size_t i = 0; i < assignment.rows(); ++i) w(j, i) = col > 0.0 ? assignment(i, j) / col : 0.0;
  }
  return ad::matmul(nodes.tape->constant(std::move(w)), nodes);
}

Matrix Model::predict(const ModelInput& in) const {
  ad::Tape t;
  nn::Binding p(t, params_, false);
  return forward(p, in).value();
}

void Model::init_readout(std::size_t width, std::mt19937_64& rng) {
  const std::size_t ctx = config_.tpcf_context == TpcfContext::None ? 0 : static_cast<std::size_t>(config_.tpcf_dim);
  if (config_.tpcf_context != TpcfContext::None && ctx == 0)
    throw ConfigError("tpcf_context requires tpcf_dim > 0 (set from the dataset)");
  readout_spec_.widths = {width + ctx};
  for (int m : config_.mlp_readout_widths) readout_spec_.widths.push_back(static_cast<std::size_t>(m * config_.d_hidden));
  readout_spec_.widths.push_back(static_cast<std::size_t>(config_.n_targets));
  nn::mlp_init(params_, "readout", readout_spec_, rng);
}

ad::Var Model::readout_graph(const nn::Binding& p, ad::Var pooled, const ModelInput& in) const {
  if (config_.tpcf_context != TpcfContext::None) {
    if (in.context.empty()) throw std::invalid_argument("readout: tpcf context requested but the input has none");
    if (in.context.size() != static_cast<std::size_t>(config_.tpcf_dim))
      throw std::invalid_argument("readout: context has " + std::to_string(in.context.size()) + " entries, model expects " +
                                  std::to_string(config_.tpcf_dim));
    ad::Var ctx = p.tape().constant(Matrix(1, in.context.size(), in.context));
    pooled = ad::concat_cols({pooled, ctx});
  }
  return nn::mlp_forward(readout_spec_, p, "readout", pooled);
}

std::unique_ptr<Model> make_model(const ModelConfig& config) {
  config.validate();
  switch (config.architecture) {
    case Architecture::Gnn: return detail::make_gnn(config);
    case Architecture::Egnn: return detail::make_egnn(config);
    case Architecture::Segnn: return detail::make_segnn(config);
    case Architecture::Nequip: return detail::make_nequip(config);
    case Architecture::PointNet: return detail::make_pointnet(config);
    case Architecture::TpcfMlp: return detail::make_tpcf_mlp(config);
  }
  throw std::logic_error("make_model: unknown architecture");
}

namespace detail {

std::string layer_name(const std::string& prefix, int index, const char* part) {
  return prefix + std::to_string(index) + "/" + part;
}

}  // namespace detail

}  // namespace galgraph
