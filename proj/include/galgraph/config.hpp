#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "galgraph/geometry.hpp"

namespace galgraph {

// TpcfMlp is the summary-statistic baseline: an MLP on the 2PCF context alone.
enum class Architecture { Gnn, Egnn, Segnn, Nequip, PointNet, TpcfMlp };
enum class Aggregation { Sum, Mean, Max };
enum class Task { Graph, Node };
enum class TpcfContext { None, Full, Small, Large };
enum class Attention { None, Global, LocalGlobal, Invariant };
enum class Combine { Mean, Concat };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Key names follow the published hyperparameter tables where one exists.
struct ModelConfig {
  Architecture architecture = Architecture::Gnn;
  int d_hidden = 128;
  int n_layers = 3;                              // layers in every update MLP
  std::vector<int> mlp_readout_widths = {4, 2, 2};  // multiples of d_hidden
  bool residual = true;
  int message_passing_steps = 2;
  int k = 10;
  int n_radial_basis = 64;
  double radial_cutoff = 0.6;
  int l_max = 1;
  int d_hidden_steerable = 0;  // channels per l > 0 irrep; 0 means d_hidden / 4
  Aggregation message_passing_agg = Aggregation::Mean;
  Aggregation readout_agg = Aggregation::Mean;
  Task task = Task::Graph;
  bool use_velocities = false;
  bool velocities_as_steerable = false;
  TpcfContext tpcf_context = TpcfContext::None;
  int tpcf_dim = 0;   // context length after slicing, set from the dataset
  int n_targets = 2;  // graph-task outputs, set from the dataset
  // Isotropic keeps rigid motions exact symmetries; zscore scales each axis.
  CoordinateScaling coordinate_scaling = CoordinateScaling::Isotropic;

  double egnn_c = 0.0;  // 0 means 1/k

  Attention attention = Attention::None;
  int n_heads = 4;

  int n_downsamples = 2;
  int d_downsampling_factor = 2;
  int k_downsample = 10;
  double r_downsample = 0.05;  // parsed for table parity; grouping uses kNN
  Combine combine_hierarchies_method = Combine::Mean;
  std::uint64_t fps_seed = 0;

  // Training.
  double learning_rate = 1e-3;
  double decay = 1e-5;
  int n_steps = 5000;
  int batch_size = 32;
  int eval_interval = 50;
  std::uint64_t seed = 0;

  bool uses_graph() const { return architecture != Architecture::TpcfMlp; }
  bool steerable() const { return architecture == Architecture::Segnn || architecture == Architecture::Nequip; }
  int steerable_channels() const { return d_hidden_steerable > 0 ? d_hidden_steerable : std::max(1, d_hidden / 4); }
  double egnn_constant() const { return egnn_c > 0.0 ? egnn_c : 1.0 / k; }
  void validate() const;
};

ModelConfig parse_config(const std::string& text, const std::string& source = "<config>");
ModelConfig load_config(const std::string& path);
// Applies one "key = value" assignment; used by the parser and CLI overrides.
void set_config_value(ModelConfig& c, const std::string& key, const std::string& value);
std::vector<std::string> config_keys();
std::string to_text(const ModelConfig& c);

std::string to_string(Architecture a);
std::string to_string(Aggregation a);

}  // namespace galgraph
