#include <stdexcept>

#include "galgraph/autodiff.hpp"

namespace galgraph::ad {

const Matrix& Var::value() const { return tape->value(id); }
const Matrix& Var::grad() const { return tape->grad_or_empty(id); }
bool Var::requires_grad() const { return tape->requires_grad(id); }

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(Matrix value) { return push(std::move(value), true, nullptr); }

Var Tape::push(Matrix value, bool requires_grad, Backward backward) {
  nodes_.push_back({std::move(value), Matrix(), requires_grad, requires_grad ? std::move(backward) : nullptr});
  return {this, nodes_.size() - 1};
}

Matrix& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("Tape::backward: variable belongs to another tape");
  const Matrix& v = value(loss.id);
  if (v.rows() != 1 || v.cols() != 1) throw std::invalid_argument("Tape::backward: loss must be 1x1, got " + v.shape_string());
  grad(loss.id)(0, 0) += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && !n.grad.empty()) n.backward(*this, i);
  }
}

void Tape::zero_grad() {
  for (auto& n : nodes_) n.grad = Matrix();
}

}  // namespace galgraph::ad
