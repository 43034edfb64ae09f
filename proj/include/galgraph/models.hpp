#pragma once

#include <memory>
#include <vector>

#include "galgraph/autodiff.hpp"
#include "galgraph/config.hpp"
#include "galgraph/geometry.hpp"
#include "galgraph/harmonics.hpp"
#include "galgraph/nn.hpp"

namespace galgraph {

// Everything a model needs from one point cloud, precomputed once.
struct ModelInput {
  PointCloud cloud;             // raw positions and box metric
  Graph graph;                  // kNN graph; radial_embedding in model units
  Vec3 scale{1.0, 1.0, 1.0};    // raw displacement -> model units (per axis)
  Matrix edge_vectors;          // E x 3 scaled displacements r_ij
  Matrix edge_sh;               // E x (l_max+1)^2 harmonics of r_ij / |r_ij| (steerable models)
  Matrix velocities;            // N x 3 standardized velocities, empty when unused
  std::vector<double> context;  // sliced and standardized 2PCF, empty when unused

  std::size_t n_nodes() const { return graph.n_nodes; }
};

ModelInput prepare_input(const PointCloud& cloud, const ModelConfig& config, std::vector<double> context = {});

// Velocities in model units: centred and scaled the same way as displacements.
Matrix standardized_velocities(const PointCloud& cloud, CoordinateScaling mode);

class Model {
 public:
  virtual ~Model() = default;

  const ModelConfig& config() const { return config_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  // Graph task: 1 x n_targets. Node task: N x 3.
  virtual ad::Var forward(const nn::Binding& p, const ModelInput& in) const = 0;
  Matrix predict(const ModelInput& in) const;

 protected:
  explicit Model(ModelConfig c) : config_(std::move(c)) {}

  // Initializes the readout head for a pooled representation of `width`.
  void init_readout(std::size_t width, std::mt19937_64& rng);
  // Pooled representation -> (context concat) -> readout MLP.
  ad::Var readout_graph(const nn::Binding& p, ad::Var pooled, const ModelInput& in) const;

  ModelConfig config_;
  nn::ParameterStore params_;
  nn::MlpSpec readout_spec_;
};

std::unique_ptr<Model> make_model(const ModelConfig& config);

// Layout helpers shared with tests.
Irreps hidden_irreps(const ModelConfig& config);
Irreps node_input_irreps(const ModelConfig& config);
std::size_t node_input_width(const ModelConfig& config);
Matrix node_inputs(const ModelInput& in, const ModelConfig& config);

ad::Var aggregate(ad::Var edges, const ad::Index& receivers, std::size_t n_nodes, Aggregation agg);
ad::Var pool_nodes(ad::Var nodes, Aggregation agg);

// Softmax assignment of nodes to centroids with model-unit distances.
Matrix pointnet_assignment(const ModelInput& in, const std::vector<std::uint32_t>& centroids);
// Centroid features as assignment-weighted means of node features.
ad::Var pointnet_pool(ad::Var nodes, const Matrix& assignment);

}  // namespace galgraph
