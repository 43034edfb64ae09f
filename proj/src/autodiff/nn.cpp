#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "galgraph/binary_io.hpp"
#include "galgraph/nn.hpp"

namespace galgraph::nn {

Matrix& ParameterStore::add(const std::string& name, Matrix value) {
  auto [it, inserted] = params_.emplace(name, std::move(value));
  if (!inserted) throw std::invalid_argument("ParameterStore: duplicate parameter '" + name + "'");
  return it->second;
}

Matrix& ParameterStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("ParameterStore: no parameter '" + name + "'");
  return it->second;
}

const Matrix& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("ParameterStore: no parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterStore::count() const {
  std::size_t n = 0;
  for (const auto& [_, m] : params_) n += m.size();
  return n;
}

Matrix uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = u(rng);
  return m;
}

Binding::Binding(ad::Tape& tape, const ParameterStore& store, bool requires_grad) : tape_(&tape) {
  for (const auto& [name, value] : store.items())
    vars_.emplace(name, requires_grad ? tape.parameter(value) : tape.constant(value));
}

ad::Var Binding::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::out_of_range("Binding: no parameter '" + name + "'");
  return it->second;
}

void Binding::accumulate_grads(TensorMap& into) const {
  for (const auto& [name, var] : vars_) {
    auto it = into.find(name);
    if (it == into.end()) it = into.emplace(name, Matrix(var.rows(), var.cols(), 0.0)).first;
    if (!tape_->has_grad(var.id)) continue;
    const Matrix& g = tape_->grad_or_empty(var.id);
    for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
  }
}

void linear_init(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                 std::mt19937_64& rng, bool bias) {
  store.add(name + "/w", uniform_init(in, out, in, rng));
  if (bias) store.add(name + "/b", Matrix(1, out, 0.0));
}

ad::Var linear(const Binding& p, const std::string& name, ad::Var x, bool bias) {
  ad::Var y = ad::matmul(x, p[name + "/w"]);
  return bias ? ad::add_bias(y, p[name + "/b"]) : y;
}

void MlpSpec::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("MlpSpec: need at least one layer");
  for (auto w : widths)
    if (w == 0) throw std::invalid_argument("MlpSpec: widths must be positive");
  if (residual && widths.front() != widths.back())
    throw std::invalid_argument("MlpSpec: residual needs equal input and output widths (" +
                                std::to_string(widths.front()) + " vs " + std::to_string(widths.back()) + ")");
}

void mlp_init(ParameterStore& store, const std::string& prefix, const MlpSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  for (std::size_t l = 0; l < spec.n_layers(); ++l)
    linear_init(store, prefix + "/" + std::to_string(l), spec.widths[l], spec.widths[l + 1], rng);
}

ad::Var mlp_forward(const MlpSpec& spec, const Binding& p, const std::string& prefix, ad::Var x) {
  spec.validate();
  if (x.cols() != spec.widths.front())
    throw std::invalid_argument("mlp_forward(" + prefix + "): input has " + std::to_string(x.cols()) +
                                " columns, expected " + std::to_string(spec.widths.front()));
  ad::Var h = x;
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    h = linear(p, prefix + "/" + std::to_string(l), h);
    if (l + 1 < spec.n_layers()) h = ad::gelu(h);
  }
  return spec.residual ? ad::add(x, h) : h;
}

void AdamW::update(ParameterStore& params, const TensorMap& grads, double lr) {
  ++step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (auto& [name, p] : params.items()) {
    auto g = grads.find(name);
    if (g == grads.end()) continue;
    if (!g->second.same_shape(p)) throw std::invalid_argument("AdamW: gradient shape mismatch for " + name);
    Matrix& mm = m.try_emplace(name, p.rows(), p.cols(), 0.0).first->second;
    Matrix& vv = v.try_emplace(name, p.rows(), p.cols(), 0.0).first->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g->second[i];
      mm[i] = beta1 * mm[i] + (1.0 - beta1) * gi;
      vv[i] = beta2 * vv[i] + (1.0 - beta2) * gi * gi;
      const double mhat = mm[i] / c1, vhat = vv[i] / c2;
      p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p[i]);
    }
  }
}

double cosine_decay(std::int64_t step, std::int64_t total_steps, double base_lr) {
  if (total_steps <= 0) return base_lr;
  const double frac = static_cast<double>(std::clamp<std::int64_t>(step, 0, total_steps)) / static_cast<double>(total_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

namespace {
constexpr char kCheckpointMagic[4] = {'E', 'Q', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp);
    io::write_bytes(out, kCheckpointMagic, 4);
    io::write(out, kCheckpointVersion);
    io::write(out, ckpt.step);
    io::write_string(out, ckpt.config);
    io::write(out, static_cast<std::uint64_t>(ckpt.tensors.size()));
    for (const auto& [name, m] : ckpt.tensors) {
      io::write_string(out, name);
      io::write(out, static_cast<std::uint64_t>(m.rows()));
      io::write(out, static_cast<std::uint64_t>(m.cols()));
      io::write_bytes(out, m.data(), m.size() * sizeof(double));
    }
    if (!out) throw std::runtime_error("error writing checkpoint " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw std::runtime_error("cannot move checkpoint into " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[4];
  io::read_bytes(in, magic, 4, "checkpoint magic");
  if (!std::equal(magic, magic + 4, kCheckpointMagic)) throw io::FormatError(path + ": not a checkpoint (bad magic)");
  const auto version = io::read<std::uint32_t>(in, "checkpoint version");
  if (version != kCheckpointVersion)
    throw io::FormatError(path + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.step = io::read<std::int64_t>(in, "checkpoint step");
  c.config = io::read_string(in, "checkpoint config");
  const auto n = io::read<std::uint64_t>(in, "tensor count");
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string name = io::read_string(in, "tensor name");
    const auto rows = io::read<std::uint64_t>(in, "tensor rows");
    const auto cols = io::read<std::uint64_t>(in, "tensor cols");
    if (rows * cols > (1ull << 32)) throw io::FormatError(path + ": implausible tensor size for " + name);
    Matrix m(rows, cols);
    io::read_bytes(in, m.data(), m.size() * sizeof(double), "tensor data");
    c.tensors.emplace(std::move(name), std::move(m));
  }
  return c;
}

}  // namespace galgraph::nn
