#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "galgraph/autodiff.hpp"

namespace galgraph::nn {

using TensorMap = std::map<std::string, Matrix>;

class ParameterStore {
 public:
  Matrix& add(const std::string& name, Matrix value);
  Matrix& get(const std::string& name);
  const Matrix& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }
  const TensorMap& items() const { return params_; }
  TensorMap& items() { return params_; }
  std::size_t count() const;

 private:
  TensorMap params_;
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Matrix uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, std::mt19937_64& rng);

// The store's tensors placed on a tape as leaves.
class Binding {
 public:
  Binding(ad::Tape& tape, const ParameterStore& store, bool requires_grad = true);
  ad::Var operator[](const std::string& name) const;
  ad::Tape& tape() const { return *tape_; }
  // Adds each leaf's gradient into `into` (missing entries are created).
  void accumulate_grads(TensorMap& into) const;

 private:
  ad::Tape* tape_;
  std::map<std::string, ad::Var> vars_;
};

void linear_init(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                 std::mt19937_64& rng, bool bias = true);
ad::Var linear(const Binding& p, const std::string& name, ad::Var x, bool bias = true);

struct MlpSpec {
  std::vector<std::size_t> widths;  // input width first, output width last
  bool residual = false;

  std::size_t n_layers() const { return widths.empty() ? 0 : widths.size() - 1; }
  void validate() const;
};

void mlp_init(ParameterStore& store, const std::string& prefix, const MlpSpec& spec, std::mt19937_64& rng);
// Dense layers with GELU between them and a linear last layer.
ad::Var mlp_forward(const MlpSpec& spec, const Binding& p, const std::string& prefix, ad::Var x);

struct AdamW {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  std::int64_t step = 0;
  TensorMap m, v;

  void update(ParameterStore& params, const TensorMap& grads, double lr);
};

double cosine_decay(std::int64_t step, std::int64_t total_steps, double base_lr);

// Binary container for named tensors plus a text header.
struct Checkpoint {
  std::string config;
  std::int64_t step = 0;
  TensorMap tensors;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace galgraph::nn
