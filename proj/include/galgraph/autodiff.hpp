#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "galgraph/harmonics.hpp"
#include "galgraph/matrix.hpp"

// Reverse-mode autodiff over row-major matrices. A Tape records every value
// produced during a forward pass; backward() walks it once in reverse.
// One tape per thread: tapes are not synchronized.

namespace galgraph::ad {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const;
};

class Tape {
 public:
  // Called with the tape and the id of the node being differentiated.
  using Backward = std::function<void(Tape&, std::size_t)>;

  Var constant(Matrix value);
  Var parameter(Matrix value);
  Var push(Matrix value, bool requires_grad, Backward backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient of a node, zero-initialized on first access.
  Matrix& grad(std::size_t id);
  const Matrix& grad_or_empty(std::size_t id) const { return nodes_[id].grad; }
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }

  // Seeds d(loss)/d(loss) = 1; loss must be 1x1.
  void backward(Var loss);
  void zero_grad();
  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::deque<Node> nodes_;
};

using Index = std::vector<std::uint32_t>;

// Dense algebra.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_bias(Var a, Var bias);            // bias: 1 x cols, broadcast over rows
Var mul_col(Var a, Var col);              // col: rows x 1, scales each row
Var mul_const_col(Var a, std::vector<double> col);
Var sum_rows(Var a);                      // 1 x cols
Var sum(Var a);                           // 1 x 1
Var mean(Var a);                          // 1 x 1
Var mse(Var pred, Var target);            // mean squared error, 1 x 1

// Shape.
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var select_cols(Var a, const std::vector<int>& cols);
Var gather_rows(Var a, const Index& rows);
Var row(Var a, std::size_t r);

// Segment reductions over rows; `segment[r]` names the output row of input
// row r. Empty segments produce zeros.
Var segment_sum(Var a, const Index& segment, std::size_t n_segments);
Var segment_mean(Var a, const Index& segment, std::size_t n_segments);
Var segment_max(Var a, const Index& segment, std::size_t n_segments);
// Softmax over rows sharing a segment, independently per column.
Var segment_softmax(Var scores, const Index& segment, std::size_t n_segments);

// Elementwise.
Var gelu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);

// Geometry.
Var row_sq_norm(Var a);                             // rows x 1
Var bessel(Var s, int n, double cutoff);            // s: rows x 1 -> rows x n

// Multi-head helpers; cols of `a` split into `heads` equal blocks.
Var head_dot(Var q, Var k, int heads);              // rows x heads, block dot products
Var head_mul(Var values, Var weights, int heads);   // block c of row r scaled by weights(r, c)

// Steerable layers, applied row by row. The layer objects are captured by
// reference and must outlive the tape's backward pass.
Var tensor_product(const TensorProduct& tp, Var a, Var b, Var weights);  // weights: 1 x count
Var channelwise_tensor_product(const ChannelwiseTensorProduct& tp, Var a, Var b,
                               Var weights);  // weights: rows x count
Var equivariant_linear(const EquivariantLinear& lin, Var x, Var weights);
Var gate(const Gate& g, Var x);
Var add_scalar_bias(Var x, const Irreps& irreps, Var bias);  // bias over the 0e columns

}  // namespace galgraph::ad
