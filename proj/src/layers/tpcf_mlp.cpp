#include "architectures.hpp"
#include "galgraph/statistics.hpp"

namespace galgraph::detail {

namespace {

class TpcfMlpModel final : public Model {
 public:
  explicit TpcfMlpModel(const ModelConfig& c)
      : Model(c),
        spec_(tpcf_mlp_spec(static_cast<std::size_t>(c.tpcf_dim), static_cast<std::size_t>(c.d_hidden), c.n_layers,
                            static_cast<std::size_t>(c.n_targets))) {
    if (c.tpcf_dim < 1) throw ConfigError("tpcf_mlp requires tpcf_dim > 0 (set from the dataset)");
    std::mt19937_64 rng(c.seed);
    tpcf_mlp_init(params_, spec_, rng);
  }

  ad::Var forward(const nn::Binding& p, const ModelInput& in) const override {
    if (in.context.size() != static_cast<std::size_t>(config_.tpcf_dim))
      throw std::invalid_argument("tpcf_mlp: context has " + std::to_string(in.context.size()) + " entries, model expects " +
                                  std::to_string(config_.tpcf_dim));
    return tpcf_mlp_baseline(p, spec_, p.tape().constant(Matrix(1, in.context.size(), in.context)));
  }

 private:
  nn::MlpSpec spec_;
};

}  // namespace

std::unique_ptr<Model> make_tpcf_mlp(const ModelConfig& c) { return std::make_unique<TpcfMlpModel>(c); }

}  // namespace galgraph::detail
