#pragma once

#include <memory>

#include "galgraph/models.hpp"

namespace galgraph::detail {

std::unique_ptr<Model> make_gnn(const ModelConfig& c);
std::unique_ptr<Model> make_egnn(const ModelConfig& c);
std::unique_ptr<Model> make_segnn(const ModelConfig& c);
std::unique_ptr<Model> make_nequip(const ModelConfig& c);
std::unique_ptr<Model> make_pointnet(const ModelConfig& c);
std::unique_ptr<Model> make_tpcf_mlp(const ModelConfig& c);

std::string layer_name(const std::string& prefix, int index, const char* part);

// Plain message-passing block shared by the GNN and PointNet++.
class MessagePassing {
 public:
  MessagePassing(const ModelConfig& c, std::string prefix, std::size_t edge_in_width);
  void init(nn::ParameterStore& store, std::mt19937_64& rng) const;
  // Returns updated node features; `edge_state` carries e_ij between steps.
  ad::Var forward(const nn::Binding& p, const ModelInput& in, ad::Var h) const;

 private:
  ad::Var aggregate_step(const nn::Binding& p, const ModelInput& in, ad::Var h, ad::Var e, int step) const;

  ModelConfig config_;
  std::string prefix_;
  std::size_t edge_in_width_;
};

// Steerable MLP: weighted CG products with an attribute, gated between layers.
class SteerableMlp {
 public:
  SteerableMlp(Irreps in, Irreps attr, Irreps out, int n_layers, bool gate_last = false);
  void init(nn::ParameterStore& store, const std::string& prefix, std::mt19937_64& rng) const;
  ad::Var forward(const nn::Binding& p, const std::string& prefix, ad::Var x, ad::Var attr) const;
  const Irreps& out() const { return out_; }
  const std::vector<TensorProduct>& products() const { return products_; }

 private:
  Irreps out_;
  std::vector<TensorProduct> products_;
  std::vector<std::unique_ptr<Gate>> gates_;  // null for ungated layers
};

}  // namespace galgraph::detail
