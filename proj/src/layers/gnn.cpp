#include <cmath>

#include "architectures.hpp"

namespace galgraph::detail {

namespace {

nn::MlpSpec update_mlp(const ModelConfig& c, std::size_t in, std::size_t out) {
  nn::MlpSpec s{{in}, false};
  for (int l = 1; l < c.n_layers; ++l) s.widths.push_back(static_cast<std::size_t>(c.d_hidden));
  s.widths.push_back(out);
  return s;
}

// Multi-head attention pooling of all nodes against one learned query.
ad::Var attention_pool(const nn::Binding& p, ad::Var h, int heads) {
  const std::size_t d = h.cols();
  ad::Var keys = nn::linear(p, "readout_attn/key", h, false);
  ad::Var values = nn::linear(p, "readout_attn/value", h, false);
  ad::Var query = ad::gather_rows(p["readout_attn/query"], ad::Index(h.rows(), 0));
  const double inv = 1.0 / std::sqrt(static_cast<double>(d / static_cast<std::size_t>(heads)));
  ad::Var scores = ad::scale(ad::head_dot(query, keys, heads), inv);
  ad::Var alpha = ad::segment_softmax(scores, ad::Index(h.rows(), 0), 1);
  return ad::sum_rows(ad::head_mul(values, alpha, heads));
}

}  // namespace

MessagePassing::MessagePassing(const ModelConfig& c, std::string prefix, std::size_t edge_in_width)
    : config_(c), prefix_(std::move(prefix)), edge_in_width_(edge_in_width) {}

void MessagePassing::init(nn::ParameterStore& store, std::mt19937_64& rng) const {
  const auto d = static_cast<std::size_t>(config_.d_hidden);
  for (int s = 0; s < config_.message_passing_steps; ++s) {
    const std::size_t e_in = 2 * d + (s == 0 ? edge_in_width_ : d);
    nn::mlp_init(store, layer_name(prefix_, s, "edge"), update_mlp(config_, e_in, d), rng);
    nn::mlp_init(store, layer_name(prefix_, s, "node"), update_mlp(config_, 2 * d, d), rng);
    switch (config_.attention) {
      case Attention::LocalGlobal:
        nn::linear_init(store, layer_name(prefix_, s, "attn_q"), d, d, rng, false);
        nn::linear_init(store, layer_name(prefix_, s, "attn_k"), d, d, rng, false);
        break;
      case Attention::Invariant:
        nn::linear_init(store, layer_name(prefix_, s, "attn_score"), edge_in_width_,
                        static_cast<std::size_t>(config_.n_heads), rng, false);
        break;
      default: break;
    }
  }
}

ad::Var MessagePassing::aggregate_step(const nn::Binding& p, const ModelInput& in, ad::Var h, ad::Var e,
                                       int step) const {
  const auto& g = in.graph;
  const int heads = config_.n_heads;
  if (config_.attention == Attention::LocalGlobal || config_.attention == Attention::Invariant) {
    ad::Var scores;
    if (config_.attention == Attention::LocalGlobal) {
      ad::Var q = ad::gather_rows(nn::linear(p, layer_name(prefix_, step, "attn_q"), h, false), g.receivers);
      ad::Var k = nn::linear(p, layer_name(prefix_, step, "attn_k"), e, false);
      const double inv = std::sqrt(static_cast<double>(heads) / static_cast<double>(config_.d_hidden));
      scores = ad::scale(ad::head_dot(q, k, heads), inv);
    } else {
      ad::Var radial = p.tape().constant(g.radial_embedding);
      scores = nn::linear(p, layer_name(prefix_, step, "attn_score"), radial, false);
    }
    ad::Var alpha = ad::segment_softmax(scores, g.receivers, g.n_nodes);
    return ad::segment_sum(ad::head_mul(e, alpha, heads), g.receivers, g.n_nodes);
  }
  return aggregate(e, g.receivers, g.n_nodes, config_.message_passing_agg);
}

ad::Var MessagePassing::forward(const nn::Binding& p, const ModelInput& in, ad::Var h) const {
  const auto& g = in.graph;
  const auto d = static_cast<std::size_t>(config_.d_hidden);
  ad::Var e = p.tape().constant(g.radial_embedding);
  for (int s = 0; s < config_.message_passing_steps; ++s) {
    const std::size_t e_in = 2 * d + (s == 0 ? edge_in_width_ : d);
    ad::Var x = ad::concat_cols({ad::gather_rows(h, g.receivers), ad::gather_rows(h, g.senders), e});
    e = nn::mlp_forward(update_mlp(config_, e_in, d), p, layer_name(prefix_, s, "edge"), x);
    ad::Var agg = aggregate_step(p, in, h, e, s);
    ad::Var hn = nn::mlp_forward(update_mlp(config_, 2 * d, d), p, layer_name(prefix_, s, "node"),
                                 ad::concat_cols({h, agg}));
    h = config_.residual ? ad::add(h, hn) : hn;
  }
  return h;
}

namespace {

class GnnModel final : public Model {
 public:
  explicit GnnModel(const ModelConfig& c)
      : Model(c), mp_(c, "mp", static_cast<std::size_t>(c.n_radial_basis)) {
    std::mt19937_64 rng(c.seed);
    const auto d = static_cast<std::size_t>(c.d_hidden);
    nn::linear_init(params_, "embed", node_input_width(c), d, rng);
    mp_.init(params_, rng);
    if (c.task == Task::Node) {
      nn::linear_init(params_, "node_head", d, 3, rng);
      return;
    }
    if (c.attention == Attention::Global || c.attention == Attention::LocalGlobal) {
      params_.add("readout_attn/query", nn::uniform_init(1, d, d, rng));
      nn::linear_init(params_, "readout_attn/key", d, d, rng, false);
      nn::linear_init(params_, "readout_attn/value", d, d, rng, false);
    }
    init_readout(d, rng);
  }

  ad::Var forward(const nn::Binding& p, const ModelInput& in) const override {
    ad::Var h = nn::linear(p, "embed", p.tape().constant(node_inputs(in, config_)));
    h = mp_.forward(p, in, h);
    if (config_.task == Task::Node) return nn::linear(p, "node_head", h);
    const bool attn = config_.attention == Attention::Global || config_.attention == Attention::LocalGlobal;
    ad::Var pooled = attn ? attention_pool(p, h, config_.n_heads) : pool_nodes(h, config_.readout_agg);
    return readout_graph(p, pooled, in);
  }

 private:
  MessagePassing mp_;
};

}  // namespace

std::unique_ptr<Model> make_gnn(const ModelConfig& c) { return std::make_unique<GnnModel>(c); }

}  // namespace galgraph::detail
