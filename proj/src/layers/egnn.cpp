#include "architectures.hpp"

namespace galgraph::detail {

namespace {

nn::MlpSpec spec(const ModelConfig& c, std::size_t in, std::size_t out) {
  nn::MlpSpec s{{in}, false};
  for (int l = 1; l < c.n_layers; ++l) s.widths.push_back(static_cast<std::size_t>(c.d_hidden));
  s.widths.push_back(out);
  return s;
}

class EgnnModel final : public Model {
 public:
  explicit EgnnModel(const ModelConfig& c) : Model(c) {
    std::mt19937_64 rng(c.seed);
    const auto d = static_cast<std::size_t>(c.d_hidden), nr = static_cast<std::size_t>(c.n_radial_basis);
    nn::linear_init(params_, "embed", node_input_width(c), d, rng);
    for (int s = 0; s < c.message_passing_steps; ++s) {
      nn::mlp_init(params_, layer_name("mp", s, "edge"), spec(c, 2 * d + nr, d), rng);
      nn::mlp_init(params_, layer_name("mp", s, "coord"), spec(c, d, 1), rng);
      nn::mlp_init(params_, layer_name("mp", s, "node"), spec(c, 2 * d, d), rng);
    }
    if (c.task == Task::Graph) init_readout(d, rng);
  }

  ad::Var forward(const nn::Binding& p, const ModelInput& in) const override {
    const auto& g = in.graph;
    const auto& c = config_;
    const auto d = static_cast<std::size_t>(c.d_hidden), nr = static_cast<std::size_t>(c.n_radial_basis);
    ad::Tape& t = p.tape();
    ad::Var h = nn::linear(p, "embed", t.constant(node_inputs(in, c)));
    ad::Var r = t.constant(in.edge_vectors);
    ad::Var moved = t.constant(Matrix(g.n_nodes, 3, 0.0));
    for (int s = 0; s < c.message_passing_steps; ++s) {
      ad::Var radial = s == 0 ? t.constant(g.radial_embedding) : ad::bessel(ad::row_sq_norm(r), c.n_radial_basis, c.radial_cutoff);
      ad::Var x = ad::concat_cols({ad::gather_rows(h, g.receivers), ad::gather_rows(h, g.senders), radial});
      ad::Var e = nn::mlp_forward(spec(c, 2 * d + nr, d), p, layer_name("mp", s, "edge"), x);
      ad::Var phi = nn::mlp_forward(spec(c, d, 1), p, layer_name("mp", s, "coord"), e);
      ad::Var dx = ad::scale(ad::segment_sum(ad::mul_col(r, phi), g.receivers, g.n_nodes), c.egnn_constant());
      ad::Var agg = aggregate(e, g.receivers, g.n_nodes, c.message_passing_agg);
      ad::Var hn = nn::mlp_forward(spec(c, 2 * d, d), p, layer_name("mp", s, "node"), ad::concat_cols({h, agg}));
      h = c.residual ? ad::add(h, hn) : hn;
      moved = ad::add(moved, dx);
      r = ad::add(r, ad::sub(ad::gather_rows(dx, g.receivers), ad::gather_rows(dx, g.senders)));
    }
    if (c.task == Task::Node) return moved;
    return readout_graph(p, pool_nodes(h, c.readout_agg), in);
  }
};

}  // namespace

std::unique_ptr<Model> make_egnn(const ModelConfig& c) { return std::make_unique<EgnnModel>(c); }

}  // namespace galgraph::detail
