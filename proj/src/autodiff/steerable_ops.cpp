#include <stdexcept>
#include <string>

#include "galgraph/autodiff.hpp"

namespace galgraph::ad {

namespace {

void check_cols(const char* op, const Var& v, int expected, const char* what) {
  if (v.cols() != static_cast<std::size_t>(expected))
    throw std::invalid_argument(std::string(op) + ": " + what + " has " + std::to_string(v.cols()) +
                                " columns, irreps need " + std::to_string(expected));
}

double* grad_ptr(Tape& t, Var v, std::size_t row) {
  return t.requires_grad(v.id) ? &t.grad(v.id)(row, 0) : nullptr;
}

}  // namespace

Var tensor_product(const TensorProduct& tp, Var a, Var b, Var weights) {
  Tape& t = *a.tape;
  check_cols("tensor_product", a, tp.in1().dim(), "first input");
  check_cols("tensor_product", b, tp.in2().dim(), "second input");
  if (a.rows() != b.rows()) throw std::invalid_argument("tensor_product: row mismatch");
  if (weights.value().size() != tp.weight_count())
    throw std::invalid_argument("tensor_product: expected " + std::to_string(tp.weight_count()) + " weights, got " +
                                std::to_string(weights.value().size()));
  Matrix out(a.rows(), static_cast<std::size_t>(tp.out().dim()), 0.0);
  if (a.rows() > 0) tp.forward_rows(a.rows(), a.value().data(), b.value().data(), weights.value().data(), out.data());
  const bool grad = a.requires_grad() || b.requires_grad() || weights.requires_grad();
  return t.push(std::move(out), grad, [&tp, a, b, weights](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (g.rows() == 0) return;
    double* gw = t.requires_grad(weights.id) ? t.grad(weights.id).data() : nullptr;
    tp.backward_rows(g.rows(), t.value(a.id).data(), t.value(b.id).data(), t.value(weights.id).data(), g.data(),
                     grad_ptr(t, a, 0), grad_ptr(t, b, 0), gw);
  });
}

Var channelwise_tensor_product(const ChannelwiseTensorProduct& tp, Var a, Var b, Var weights) {
  Tape& t = *a.tape;
  check_cols("channelwise_tensor_product", a, tp.in1().dim(), "first input");
  check_cols("channelwise_tensor_product", b, tp.in2().dim(), "second input");
  check_cols("channelwise_tensor_product", weights, static_cast<int>(tp.weight_count()), "weights");
  if (a.rows() != b.rows() || a.rows() != weights.rows())
    throw std::invalid_argument("channelwise_tensor_product: row mismatch");
  Matrix out(a.rows(), static_cast<std::size_t>(tp.out().dim()), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r)
    tp.forward(&a.value()(r, 0), &b.value()(r, 0), &weights.value()(r, 0), &out(r, 0));
  const bool grad = a.requires_grad() || b.requires_grad() || weights.requires_grad();
  return t.push(std::move(out), grad, [&tp, a, b, weights](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    for (std::size_t r = 0; r < g.rows(); ++r)
      tp.backward(&t.value(a.id)(r, 0), &t.value(b.id)(r, 0), &t.value(weights.id)(r, 0), &g(r, 0),
                  grad_ptr(t, a, r), grad_ptr(t, b, r), grad_ptr(t, weights, r));
  });
}

Var equivariant_linear(const EquivariantLinear& lin, Var x, Var weights) {
  Tape& t = *x.tape;
  check_cols("equivariant_linear", x, lin.in().dim(), "input");
  if (weights.value().size() != lin.weight_count())
    throw std::invalid_argument("equivariant_linear: expected " + std::to_string(lin.weight_count()) + " weights");
  Matrix out(x.rows(), static_cast<std::size_t>(lin.out().dim()), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) lin.forward(&x.value()(r, 0), weights.value().data(), &out(r, 0));
  const bool grad = x.requires_grad() || weights.requires_grad();
  return t.push(std::move(out), grad, [&lin, x, weights](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    double* gw = t.requires_grad(weights.id) ? t.grad(weights.id).data() : nullptr;
    for (std::size_t r = 0; r < g.rows(); ++r)
      lin.backward(&t.value(x.id)(r, 0), t.value(weights.id).data(), &g(r, 0), grad_ptr(t, x, r), gw);
  });
}

Var gate(const Gate& g, Var x) {
  Tape& t = *x.tape;
  check_cols("gate", x, g.in().dim(), "input");
  Matrix out(x.rows(), static_cast<std::size_t>(g.out().dim()), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) g.forward(&x.value()(r, 0), &out(r, 0));
  return t.push(std::move(out), x.requires_grad(), [&g, x](Tape& t, std::size_t self) {
    const Matrix& go = t.grad(self);
    Matrix& gx = t.grad(x.id);
    for (std::size_t r = 0; r < go.rows(); ++r) g.backward(&t.value(x.id)(r, 0), &go(r, 0), &gx(r, 0));
  });
}

Var add_scalar_bias(Var x, const Irreps& irreps, Var bias) {
  Tape& t = *x.tape;
  check_cols("add_scalar_bias", x, irreps.dim(), "input");
  const std::vector<int> cols = irreps.scalar_columns();
  if (bias.value().size() != cols.size())
    throw std::invalid_argument("add_scalar_bias: " + std::to_string(cols.size()) + " scalar columns, bias has " +
                                std::to_string(bias.value().size()));
  Matrix out = x.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t j = 0; j < cols.size(); ++j) out(r, static_cast<std::size_t>(cols[j])) += bias.value()[j];
  const bool grad = x.requires_grad() || bias.requires_grad();
  return t.push(std::move(out), grad, [x, bias, cols](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(x.id)) {
      Matrix& gx = t.grad(x.id);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (t.requires_grad(bias.id)) {
      Matrix& gb = t.grad(bias.id);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t j = 0; j < cols.size(); ++j) gb[j] += g(r, static_cast<std::size_t>(cols[j]));
    }
  });
}

}  // namespace galgraph::ad
