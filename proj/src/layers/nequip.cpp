#include <cmath>

#include "architectures.hpp"

namespace galgraph::detail {

namespace {

Irreps embed_irreps(const ModelConfig& c) {
  std::vector<MulIrrep> items{{c.d_hidden, 0, 1}};
  if (c.use_velocities && c.velocities_as_steerable) items.push_back({c.steerable_channels(), 1, -1});
  return Irreps(items);
}

struct Interaction {
  Interaction(const Irreps& in, const Irreps& sh, const Irreps& hidden, int lmax)
      : self(in, in), conv(in, sh, lmax), update(in + conv.out(), gate_input_irreps(hidden)),
        gate(hidden.n_scalars(), [&] {
          std::vector<MulIrrep> g;
          for (const auto& ir : hidden)
            if (ir.l > 0) g.push_back(ir);
          return Irreps(g);
        }()),
        residual(in == hidden) {}

  EquivariantLinear self;
  ChannelwiseTensorProduct conv;
  EquivariantLinear update;
  Gate gate;
  nn::MlpSpec radial;
  bool residual;
};

class NequipModel final : public Model {
 public:
  explicit NequipModel(const ModelConfig& c)
      : Model(c),
        hidden_(hidden_irreps(c)),
        sh_(Irreps::spherical_harmonics(c.l_max)),
        embed_(node_input_irreps(c), embed_irreps(c)) {
    std::mt19937_64 rng(c.seed);
    params_.add("embed/w", nn::uniform_init(1, embed_.weight_count(), 1, rng));
    params_.add("embed/b", Matrix(1, static_cast<std::size_t>(embed_.out().n_scalars()), 0.0));
    Irreps cur = embed_.out();
    for (int s = 0; s < c.message_passing_steps; ++s) {
      auto& block = *layers_.emplace_back(std::make_unique<Interaction>(cur, sh_, hidden_, c.l_max));
      block.radial.widths = {static_cast<std::size_t>(c.n_radial_basis)};
      for (int l = 1; l < c.n_layers; ++l) block.radial.widths.push_back(static_cast<std::size_t>(c.d_hidden));
      block.radial.widths.push_back(block.conv.weight_count());
      const std::string prefix = "mp" + std::to_string(s);
      params_.add(prefix + "/self/w", nn::uniform_init(1, block.self.weight_count(), 1, rng));
      nn::mlp_init(params_, prefix + "/radial", block.radial, rng);
      params_.add(prefix + "/update/w", nn::uniform_init(1, block.update.weight_count(), 1, rng));
      params_.add(prefix + "/update/b", Matrix(1, static_cast<std::size_t>(block.update.out().n_scalars()), 0.0));
      cur = hidden_;
    }
    if (c.task == Task::Node) {
      if (c.l_max < 1) throw ConfigError("node task needs an l=1 channel; set l_max >= 1");
      head_ = std::make_unique<EquivariantLinear>(hidden_, Irreps::parse("1x1o"));
      params_.add("node_head/w", nn::uniform_init(1, head_->weight_count(), 1, rng));
    } else {
      init_readout(static_cast<std::size_t>(hidden_.n_scalars()), rng);
    }
  }

  ad::Var forward(const nn::Binding& p, const ModelInput& in) const override {
    const auto& g = in.graph;
    const auto& c = config_;
    ad::Tape& t = p.tape();
    if (in.edge_sh.cols() != static_cast<std::size_t>(sh_.dim()))
      throw std::invalid_argument("nequip: input harmonics do not match l_max");
    ad::Var edge_attr = t.constant(in.edge_sh);
    ad::Var radial = t.constant(g.radial_embedding);
    ad::Var h = ad::add_scalar_bias(ad::equivariant_linear(embed_, t.constant(node_inputs(in, c)), p["embed/w"]),
                                    embed_.out(), p["embed/b"]);
    for (std::size_t s = 0; s < layers_.size(); ++s) {
      const Interaction& block = *layers_[s];
      const std::string prefix = "mp" + std::to_string(s);
      ad::Var senders = ad::gather_rows(ad::equivariant_linear(block.self, h, p[prefix + "/self/w"]), g.senders);
      ad::Var weights = nn::mlp_forward(block.radial, p, prefix + "/radial", radial);
      ad::Var msg = ad::channelwise_tensor_product(block.conv, senders, edge_attr, weights);
      ad::Var agg = aggregate(msg, g.receivers, g.n_nodes, c.message_passing_agg);
      // Sums are normalized by the square root of the neighbour count.
      if (c.message_passing_agg == Aggregation::Sum && g.k > 0) agg = ad::scale(agg, 1.0 / std::sqrt(double(g.k)));
      ad::Var u = ad::equivariant_linear(block.update, ad::concat_cols({h, agg}), p[prefix + "/update/w"]);
      ad::Var hn = ad::gate(block.gate, ad::add_scalar_bias(u, block.update.out(), p[prefix + "/update/b"]));
      h = block.residual && c.residual ? ad::add(h, hn) : hn;
    }
    if (c.task == Task::Node) {
      ad::Var v = ad::equivariant_linear(*head_, h, p["node_head/w"]);
      return ad::select_cols(v, {kVectorSlot[0], kVectorSlot[1], kVectorSlot[2]});
    }
    return readout_graph(p, pool_nodes(ad::select_cols(h, hidden_.scalar_columns()), c.readout_agg), in);
  }

 private:
  Irreps hidden_, sh_;
  EquivariantLinear embed_;
  std::vector<std::unique_ptr<Interaction>> layers_;
  std::unique_ptr<EquivariantLinear> head_;
};

}  // namespace

std::unique_ptr<Model> make_nequip(const ModelConfig& c) { return std::make_unique<NequipModel>(c); }

}  // namespace galgraph::detail
