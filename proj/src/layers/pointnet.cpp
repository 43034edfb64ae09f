#include "architectures.hpp"

namespace galgraph::detail {

namespace {

class PointNetModel final : public Model {
 public:
  explicit PointNetModel(const ModelConfig& c) : Model(c) {
    std::mt19937_64 rng(c.seed);
    const auto d = static_cast<std::size_t>(c.d_hidden);
    nn::linear_init(params_, "embed", node_input_width(c), d, rng);
    for (int v = 0; v < c.n_downsamples; ++v) {
      levels_.emplace_back(c, "level" + std::to_string(v) + "/mp", static_cast<std::size_t>(c.n_radial_basis));
      levels_.back().init(params_, rng);
    }
    if (c.task == Task::Node) throw ConfigError("pointnet supports graph tasks only");
    const std::size_t width = c.combine_hierarchies_method == Combine::Concat ? d * levels_.size() : d;
    init_readout(width, rng);
  }

  ad::Var forward(const nn::Binding& p, const ModelInput& in) const override {
    const auto& c = config_;
    ad::Var h = nn::linear(p, "embed", p.tape().constant(node_inputs(in, c)));
    std::vector<ad::Var> pooled;
    ModelInput level = in;
    for (std::size_t v = 0; v < levels_.size(); ++v) {
      h = levels_[v].forward(p, level, h);
      pooled.push_back(pool_nodes(h, c.readout_agg));
      if (v + 1 == levels_.size()) break;
      const auto centroids = centroids_of(level);
      h = pointnet_pool(h, pointnet_assignment(level, centroids));
      level = downsample(level, centroids);
    }
    ad::Var combined = pooled.front();
    if (c.combine_hierarchies_method == Combine::Concat) {
      combined = ad::concat_cols(pooled);
    } else {
      for (std::size_t v = 1; v < pooled.size(); ++v) combined = ad::add(combined, pooled[v]);
      combined = ad::scale(combined, 1.0 / static_cast<double>(pooled.size()));
    }
    return readout_graph(p, combined, in);
  }

 private:
  std::vector<std::uint32_t> centroids_of(const ModelInput& level) const {
    const std::size_t n = level.n_nodes();
    const std::size_t m = std::max<std::size_t>(1, n / static_cast<std::size_t>(config_.d_downsampling_factor));
    return farthest_point_sampling(level.cloud.positions, level.cloud.box, m, config_.fps_seed);
  }

  // Centroid cloud with a fresh kNN graph in the parent's model units.
  ModelInput downsample(const ModelInput& level, const std::vector<std::uint32_t>& centroids) const {
    const auto k = static_cast<std::size_t>(config_.k_downsample);
    if (centroids.size() <= k)
      throw std::invalid_argument("pointnet: " + std::to_string(centroids.size()) + " centroids cannot support k_downsample = " +
                                  std::to_string(k));
    ModelInput next;
    next.cloud.box = level.cloud.box;
    for (auto i : centroids) next.cloud.positions.push_back(level.cloud.positions[i]);
    next.graph = knn_graph(next.cloud, k);
    next.scale = level.scale;
    embed_edges(next.graph, next.scale, static_cast<std::size_t>(config_.n_radial_basis), config_.radial_cutoff);
    const auto d = scaled_displacements(next.graph, next.scale);
    next.edge_vectors = Matrix(d.size(), 3);
    for (std::size_t e = 0; e < d.size(); ++e)
      for (int a = 0; a < 3; ++a) next.edge_vectors(e, a) = d[e][a];
    return next;
  }

  std::vector<MessagePassing> levels_;
};

}  // namespace

std::unique_ptr<Model> make_pointnet(const ModelConfig& c) { return std::make_unique<PointNetModel>(c); }

}  // namespace galgraph::detail
