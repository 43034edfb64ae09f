#include <cmath>

#include "architectures.hpp"

namespace galgraph::detail {

SteerableMlp::SteerableMlp(Irreps in, Irreps attr, Irreps out, int n_layers, bool gate_last) : out_(std::move(out)) {
  int scalars = 0;
  std::vector<MulIrrep> nonscalar;
  for (const auto& ir : out_) {
    if (ir.l == 0)
      scalars += ir.mul;
    else
      nonscalar.push_back(ir);
  }
  const Irreps gated(nonscalar);
  Irreps cur = std::move(in);
  for (int l = 0; l < n_layers; ++l) {
    const bool gated_layer = l + 1 < n_layers || gate_last;
    products_.emplace_back(cur, attr, gated_layer ? gate_input_irreps(out_) : out_);
    gates_.push_back(gated_layer ? std::make_unique<Gate>(scalars, gated) : nullptr);
    cur = out_;
  }
}

void SteerableMlp::init(nn::ParameterStore& store, const std::string& prefix, std::mt19937_64& rng) const {
  // Products carry their own 1/sqrt(fan-in) path normalization.
  for (std::size_t l = 0; l < products_.size(); ++l) {
    const auto& tp = products_[l];
    store.add(prefix + "/" + std::to_string(l) + "/w", nn::uniform_init(1, tp.weight_count(), 1, rng));
    store.add(prefix + "/" + std::to_string(l) + "/b", Matrix(1, static_cast<std::size_t>(tp.out().n_scalars()), 0.0));
  }
}

ad::Var SteerableMlp::forward(const nn::Binding& p, const std::string& prefix, ad::Var x, ad::Var attr) const {
  for (std::size_t l = 0; l < products_.size(); ++l) {
    const auto& tp = products_[l];
    const std::string name = prefix + "/" + std::to_string(l);
    x = ad::add_scalar_bias(ad::tensor_product(tp, x, attr, p[name + "/w"]), tp.out(), p[name + "/b"]);
    if (gates_[l]) x = ad::gate(*gates_[l], x);
  }
  return x;
}

namespace {

Irreps radial_irreps(const ModelConfig& c) { return Irreps({{c.n_radial_basis, 0, 1}}); }

class SegnnModel final : public Model {
 public:
  explicit SegnnModel(const ModelConfig& c)
      : Model(c),
        hidden_(hidden_irreps(c)),
        sh_(Irreps::spherical_harmonics(c.l_max)),
        embed_(node_input_irreps(c), sh_, hidden_, 1) {
    std::mt19937_64 rng(c.seed);
    embed_.init(params_, "embed", rng);
    for (int s = 0; s < c.message_passing_steps; ++s) {
      edge_.emplace_back(hidden_ + hidden_ + radial_irreps(c), sh_, hidden_, c.n_layers);
      node_.emplace_back(hidden_ + hidden_, sh_, hidden_, c.n_layers);
      edge_.back().init(params_, layer_name("mp", s, "edge"), rng);
      node_.back().init(params_, layer_name("mp", s, "node"), rng);
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
      throw std::invalid_argument("segnn: input harmonics do not match l_max");
    ad::Var edge_attr = t.constant(in.edge_sh);
    ad::Var node_attr = ad::segment_mean(edge_attr, g.receivers, g.n_nodes);
    if (c.use_velocities && c.velocities_as_steerable) node_attr = ad::add(node_attr, t.constant(velocity_attributes(in)));
    ad::Var h = embed_.forward(p, "embed", t.constant(node_inputs(in, c)), node_attr);
    ad::Var radial = t.constant(g.radial_embedding);
    for (int s = 0; s < c.message_passing_steps; ++s) {
      ad::Var x = ad::concat_cols({ad::gather_rows(h, g.receivers), ad::gather_rows(h, g.senders), radial});
      ad::Var e = edge_[static_cast<std::size_t>(s)].forward(p, layer_name("mp", s, "edge"), x, edge_attr);
      ad::Var agg = aggregate(e, g.receivers, g.n_nodes, c.message_passing_agg);
      ad::Var hn = node_[static_cast<std::size_t>(s)].forward(p, layer_name("mp", s, "node"), ad::concat_cols({h, agg}),
                                                             node_attr);
      h = c.residual ? ad::add(h, hn) : hn;
    }
    if (c.task == Task::Node) {
      ad::Var v = ad::equivariant_linear(*head_, h, p["node_head/w"]);
      return ad::select_cols(v, {kVectorSlot[0], kVectorSlot[1], kVectorSlot[2]});
    }
    return readout_graph(p, pool_nodes(ad::select_cols(h, hidden_.scalar_columns()), c.readout_agg), in);
  }

  const SteerableMlp& edge_mlp(int s) const { return edge_[static_cast<std::size_t>(s)]; }

 private:
  // Harmonics of each velocity direction scaled by its speed.
  Matrix velocity_attributes(const ModelInput& in) const {
    Matrix a(in.n_nodes(), static_cast<std::size_t>(sh_.dim()), 0.0);
    for (std::size_t i = 0; i < in.n_nodes(); ++i) {
      const Vec3 v{in.velocities(i, 0), in.velocities(i, 1), in.velocities(i, 2)};
      const double speed = norm(v);
      if (speed == 0.0) continue;
      spherical_harmonics_into((1.0 / speed) * v, config_.l_max, &a(i, 0));
      for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) *= speed;
    }
    return a;
  }

  Irreps hidden_, sh_;
  SteerableMlp embed_;
  std::vector<SteerableMlp> edge_, node_;
  std::unique_ptr<EquivariantLinear> head_;
};

}  // namespace

std::unique_ptr<Model> make_segnn(const ModelConfig& c) { return std::make_unique<SegnnModel>(c); }

}  // namespace galgraph::detail
