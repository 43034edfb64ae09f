#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "galgraph/activations.hpp"
#include "galgraph/autodiff.hpp"
#include "galgraph/kernels.hpp"

namespace galgraph::ad {

namespace {

Tape& tape_of(std::initializer_list<Var> vars) {
  Tape* t = nullptr;
  for (const Var& v : vars) {
    if (!v.tape) throw std::invalid_argument("autodiff: unbound variable");
    if (t && t != v.tape) throw std::invalid_argument("autodiff: variables from different tapes");
    t = v.tape;
  }
  return *t;
}

bool any_grad(std::initializer_list<Var> vars) {
  for (const Var& v : vars)
    if (v.requires_grad()) return true;
  return false;
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
}

void check_segments(const char* op, const Matrix& a, const Index& segment, std::size_t n) {
  if (segment.size() != a.rows())
    throw std::invalid_argument(std::string(op) + ": segment index has " + std::to_string(segment.size()) +
                                " entries for " + std::to_string(a.rows()) + " rows");
  for (auto s : segment)
    if (s >= n) throw std::invalid_argument(std::string(op) + ": segment id out of range");
}

template <class F, class G>
Var unary(Var a, F f, G df) {
  Tape& t = tape_of({a});
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return t.push(std::move(y), a.requires_grad(), [a, df](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& x = t.value(a.id);
    const Matrix& y = t.value(self);
    Matrix& ga = t.grad(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of({a, b});
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: " + a.value().shape_string() + " x " + b.value().shape_string());
  Matrix c(a.rows(), b.cols(), 0.0);
  kernels::gemm_nn(a.value(), b.value(), c);
  return t.push(std::move(c), any_grad({a, b}), [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(a.id)) kernels::gemm_nt(g, t.value(b.id), t.grad(a.id));
    if (t.requires_grad(b.id)) kernels::gemm_tn(t.value(a.id), g, t.grad(b.id));
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of({a, b});
  require_same_shape("add", a.value(), b.value());
  Matrix c = a.value();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b.value()[i];
  return t.push(std::move(c), any_grad({a, b}), [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    for (Var v : {a, b})
      if (t.requires_grad(v.id)) {
        Matrix& gv = t.grad(v.id);
        for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
      }
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of({a, b});
  require_same_shape("sub", a.value(), b.value());
  Matrix c = a.value();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b.value()[i];
  return t.push(std::move(c), any_grad({a, b}), [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(a.id)) {
      Matrix& ga = t.grad(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(b.id)) {
      Matrix& gb = t.grad(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of({a, b});
  require_same_shape("mul", a.value(), b.value());
  Matrix c = a.value();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= b.value()[i];
  return t.push(std::move(c), any_grad({a, b}), [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(a.id)) {
      const Matrix& vb = t.value(b.id);
      Matrix& ga = t.grad(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (t.requires_grad(b.id)) {
      const Matrix& va = t.value(a.id);
      Matrix& gb = t.grad(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

Var scale(Var a, double s) {
  return unary(
      a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_bias(Var a, Var bias) {
  Tape& t = tape_of({a, bias});
  if (bias.rows() != 1 || bias.cols() != a.cols())
    throw std::invalid_argument("add_bias: bias " + bias.value().shape_string() + " for " + a.value().shape_string());
  Matrix c = a.value();
  const std::size_t n = c.cols();
  for (std::size_t r = 0; r < c.rows(); ++r)
    for (std::size_t j = 0; j < n; ++j) c(r, j) += bias.value()[j];
  return t.push(std::move(c), any_grad({a, bias}), [a, bias](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(a.id)) {
      Matrix& ga = t.grad(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(bias.id)) {
      Matrix& gb = t.grad(bias.id);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t j = 0; j < g.cols(); ++j) gb[j] += g(r, j);
    }
  });
}

Var mul_col(Var a, Var col) {
  Tape& t = tape_of({a, col});
  if (col.cols() != 1 || col.rows() != a.rows())
    throw std::invalid_argument("mul_col: column " + col.value().shape_string() + " for " + a.value().shape_string());
  Matrix c = a.value();
  for (std::size_t r = 0; r < c.rows(); ++r)
    for (std::size_t j = 0; j < c.cols(); ++j) c(r, j) *= col.value()[r];
  return t.push(std::move(c), any_grad({a, col}), [a, col](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& va = t.value(a.id);
    const Matrix& vc = t.value(col.id);
    if (t.requires_grad(a.id)) {
      Matrix& ga = t.grad(a.id);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t j = 0; j < g.cols(); ++j) ga(r, j) += g(r, j) * vc[r];
    }
    if (t.requires_grad(col.id)) {
      Matrix& gc = t.grad(col.id);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) s += g(r, j) * va(r, j);
        gc[r] += s;
      }
    }
  });
}

Var mul_const_col(Var a, std::vector<double> col) {
  Tape& t = tape_of({a});
  const std::size_t n = col.size();
  return mul_col(a, t.constant(Matrix(n, 1, std::move(col))));
}

Var sum_rows(Var a) {
  Tape& t = tape_of({a});
  const Matrix& x = a.value();
  Matrix c(1, x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j) c[j] += x(r, j);
  return t.push(std::move(c), a.requires_grad(), [a](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t j = 0; j < ga.cols(); ++j) ga(r, j) += g[j];
  });
}

Var sum(Var a) {
  Tape& t = tape_of({a});
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return t.push(Matrix(1, 1, s), a.requires_grad(), [a](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    Matrix& ga = t.grad(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var mean(Var a) {
  if (a.value().empty()) throw std::invalid_argument("mean: empty input");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var mse(Var pred, Var target) {
  Tape& t = tape_of({pred, target});
  require_same_shape("mse", pred.value(), target.value());
  if (pred.value().empty()) throw std::invalid_argument("mse: empty input");
  const double n = static_cast<double>(pred.value().size());
  double s = 0.0;
  for (std::size_t i = 0; i < pred.value().size(); ++i) {
    const double d = pred.value()[i] - target.value()[i];
    s += d * d;
  }
  return t.push(Matrix(1, 1, s / n), any_grad({pred, target}), [pred, target, n](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0] * 2.0 / n;
    const Matrix& p = t.value(pred.id);
    const Matrix& y = t.value(target.id);
    if (t.requires_grad(pred.id)) {
      Matrix& gp = t.grad(pred.id);
      for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g * (p[i] - y[i]);
    }
    if (t.requires_grad(target.id)) {
      Matrix& gy = t.grad(target.id);
      for (std::size_t i = 0; i < p.size(); ++i) gy[i] -= g * (p[i] - y[i]);
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Tape& t = *parts[0].tape;
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  bool grad = false;
  for (const Var& p : parts) {
    if (p.tape != &t) throw std::invalid_argument("concat_cols: variables from different tapes");
    if (p.rows() != rows)
      throw std::invalid_argument("concat_cols: row mismatch " + std::to_string(p.rows()) + " vs " + std::to_string(rows));
    cols += p.cols();
    grad = grad || p.requires_grad();
  }
  Matrix c(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(&v(r, 0), v.cols(), &c(r, off));
    off += v.cols();
  }
  return t.push(std::move(c), grad, [parts](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    std::size_t off = 0;
    for (const Var& p : parts) {
      const std::size_t n = t.value(p.id).cols();
      if (t.requires_grad(p.id) && n > 0) {
        Matrix& gp = t.grad(p.id);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t j = 0; j < n; ++j) gp(r, j) += g(r, off + j);
      }
      off += n;
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Tape& t = *parts[0].tape;
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  bool grad = false;
  for (const Var& p : parts) {
    if (p.tape != &t) throw std::invalid_argument("concat_rows: variables from different tapes");
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p.rows();
    grad = grad || p.requires_grad();
  }
  Matrix c(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    std::copy(p.value().storage().begin(), p.value().storage().end(), c.data() + off * cols);
    off += p.rows();
  }
  return t.push(std::move(c), grad, [parts](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    std::size_t off = 0;
    for (const Var& p : parts) {
      const std::size_t n = t.value(p.id).size();
      if (t.requires_grad(p.id) && n > 0) {
        Matrix& gp = t.grad(p.id);
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[off + i];
      }
      off += n;
    }
  });
}

Var select_cols(Var a, const std::vector<int>& cols) {
  Tape& t = tape_of({a});
  const Matrix& x = a.value();
  for (int c : cols)
    if (c < 0 || static_cast<std::size_t>(c) >= x.cols()) throw std::invalid_argument("select_cols: column out of range");
  Matrix y(x.rows(), cols.size());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < cols.size(); ++j) y(r, j) = x(r, static_cast<std::size_t>(cols[j]));
  return t.push(std::move(y), a.requires_grad(), [a, cols](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t j = 0; j < cols.size(); ++j) ga(r, static_cast<std::size_t>(cols[j])) += g(r, j);
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  if (begin + count > a.cols()) throw std::invalid_argument("slice_cols: range exceeds columns");
  std::vector<int> cols(count);
  for (std::size_t j = 0; j < count; ++j) cols[j] = static_cast<int>(begin + j);
  return select_cols(a, cols);
}

Var gather_rows(Var a, const Index& rows) {
  Tape& t = tape_of({a});
  const Matrix& x = a.value();
  Matrix y(rows.size(), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= x.rows()) throw std::invalid_argument("gather_rows: row index out of range");
    std::copy_n(&x(rows[r], 0), x.cols(), &y(r, 0));
  }
  return t.push(std::move(y), a.requires_grad(), [a, rows](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    const std::size_t n = g.cols();
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t j = 0; j < n; ++j) ga(rows[r], j) += g(r, j);
  });
}

Var row(Var a, std::size_t r) { return gather_rows(a, Index{static_cast<std::uint32_t>(r)}); }

Var segment_sum(Var a, const Index& segment, std::size_t n_segments) {
  Tape& t = tape_of({a});
  const Matrix& x = a.value();
  check_segments("segment_sum", x, segment, n_segments);
  Matrix y(n_segments, x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j) y(segment[r], j) += x(r, j);
  return t.push(std::move(y), a.requires_grad(), [a, segment](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t j = 0; j < ga.cols(); ++j) ga(r, j) += g(segment[r], j);
  });
}

Var segment_mean(Var a, const Index& segment, std::size_t n_segments) {
  check_segments("segment_mean", a.value(), segment, n_segments);
  std::vector<double> count(n_segments, 0.0);
  for (auto s : segment) count[s] += 1.0;
  for (double& c : count) c = c > 0.0 ? 1.0 / c : 0.0;
  return mul_const_col(segment_sum(a, segment, n_segments), std::move(count));
}

Var segment_max(Var a, const Index& segment, std::size_t n_segments) {
  Tape& t = tape_of({a});
  const Matrix& x = a.value();
  check_segments("segment_max", x, segment, n_segments);
  const std::size_t n = x.cols();
  Matrix y(n_segments, n, 0.0);
  std::vector<std::int64_t> arg(n_segments * n, -1);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < n; ++j) {
      auto& best = arg[segment[r] * n + j];
      if (best < 0 || x(r, j) > y(segment[r], j)) {
        best = static_cast<std::int64_t>(r);
        y(segment[r], j) = x(r, j);
      }
    }
  return t.push(std::move(y), a.requires_grad(), [a, arg, n](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a.id);
    for (std::size_t s = 0; s < g.rows(); ++s)
      for (std::size_t j = 0; j < n; ++j)
        if (arg[s * n + j] >= 0) ga(static_cast<std::size_t>(arg[s * n + j]), j) += g(s, j);
  });
}

Var segment_softmax(Var scores, const Index& segment, std::size_t n_segments) {
  Tape& t = tape_of({scores});
  const Matrix& x = scores.value();
  check_segments("segment_softmax", x, segment, n_segments);
  const std::size_t n = x.cols();
  Matrix peak(n_segments, n, -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < n; ++j) peak(segment[r], j) = std::max(peak(segment[r], j), x(r, j));
  Matrix y(x.rows(), n);
  Matrix total(n_segments, n, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < n; ++j) {
      y(r, j) = std::exp(x(r, j) - peak(segment[r], j));
      total(segment[r], j) += y(r, j);
    }
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < n; ++j) y(r, j) /= total(segment[r], j);
  return t.push(std::move(y), scores.requires_grad(), [scores, segment, n_segments](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    const std::size_t n = g.cols();
    Matrix dot(n_segments, n, 0.0);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t j = 0; j < n; ++j) dot(segment[r], j) += g(r, j) * y(r, j);
    Matrix& gs = t.grad(scores.id);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t j = 0; j < n; ++j) gs(r, j) += y(r, j) * (g(r, j) - dot(segment[r], j));
  });
}

Var gelu(Var a) {
  return unary(
      a, [](double x) { return galgraph::gelu(x); }, [](double x, double) { return gelu_grad(x); });
}

Var sigmoid(Var a) {
  return unary(
      a, [](double x) { return galgraph::sigmoid(x); }, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var row_sq_norm(Var a) {
  Tape& t = tape_of({a});
  const Matrix& x = a.value();
  Matrix y(x.rows(), 1, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j) y[r] += x(r, j) * x(r, j);
  return t.push(std::move(y), a.requires_grad(), [a](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& x = t.value(a.id);
    Matrix& ga = t.grad(a.id);
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t j = 0; j < x.cols(); ++j) ga(r, j) += 2.0 * g[r] * x(r, j);
  });
}

namespace {

// sin(x)/x and its derivative, by series near the origin.
double sinc(double x) {
  if (std::abs(x) < 1e-2) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)));
  }
  return std::sin(x) / x;
}

double sinc_grad(double x) {
  if (std::abs(x) < 1e-2) {
    const double x2 = x * x;
    return x * (-1.0 / 3.0 + x2 * (1.0 / 30.0 - x2 * (1.0 / 840.0 - x2 / 45360.0)));
  }
  return (x * std::cos(x) - std::sin(x)) / (x * x);
}

}  // namespace

Var bessel(Var s, int n, double cutoff) {
  Tape& t = tape_of({s});
  if (n < 1 || cutoff <= 0.0) throw std::invalid_argument("bessel: need n >= 1 and cutoff > 0");
  if (s.cols() != 1) throw std::invalid_argument("bessel: input must be a column");
  const Matrix& x = s.value();
  const double norm = std::sqrt(2.0 / cutoff);
  Matrix y(x.rows(), static_cast<std::size_t>(n));
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (int m = 1; m <= n; ++m) {
      const double k = m * std::numbers::pi / cutoff;
      y(r, m - 1) = norm * k * sinc(k * x[r]);
    }
  return t.push(std::move(y), s.requires_grad(), [s, n, cutoff, norm](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& x = t.value(s.id);
    Matrix& gs = t.grad(s.id);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      double acc = 0.0;
      for (int m = 1; m <= n; ++m) {
        const double k = m * std::numbers::pi / cutoff;
        acc += g(r, m - 1) * norm * k * k * sinc_grad(k * x[r]);
      }
      gs[r] += acc;
    }
  });
}

Var head_dot(Var q, Var k, int heads) {
  Tape& t = tape_of({q, k});
  require_same_shape("head_dot", q.value(), k.value());
  if (heads < 1 || q.cols() % static_cast<std::size_t>(heads) != 0)
    throw std::invalid_argument("head_dot: " + std::to_string(q.cols()) + " columns not divisible into " +
                                std::to_string(heads) + " heads");
  const std::size_t h = static_cast<std::size_t>(heads), d = q.cols() / h;
  Matrix y(q.rows(), h, 0.0);
  for (std::size_t r = 0; r < q.rows(); ++r)
    for (std::size_t a = 0; a < h; ++a)
      for (std::size_t j = 0; j < d; ++j) y(r, a) += q.value()(r, a * d + j) * k.value()(r, a * d + j);
  return t.push(std::move(y), any_grad({q, k}), [q, k, h, d](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& vq = t.value(q.id);
    const Matrix& vk = t.value(k.id);
    if (t.requires_grad(q.id)) {
      Matrix& gq = t.grad(q.id);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t a = 0; a < h; ++a)
          for (std::size_t j = 0; j < d; ++j) gq(r, a * d + j) += g(r, a) * vk(r, a * d + j);
    }
    if (t.requires_grad(k.id)) {
      Matrix& gk = t.grad(k.id);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t a = 0; a < h; ++a)
          for (std::size_t j = 0; j < d; ++j) gk(r, a * d + j) += g(r, a) * vq(r, a * d + j);
    }
  });
}

Var head_mul(Var values, Var weights, int heads) {
  Tape& t = tape_of({values, weights});
  if (heads < 1 || values.cols() % static_cast<std::size_t>(heads) != 0 ||
      weights.cols() != static_cast<std::size_t>(heads) || weights.rows() != values.rows())
    throw std::invalid_argument("head_mul: values " + values.value().shape_string() + ", weights " +
                                weights.value().shape_string() + ", heads " + std::to_string(heads));
  const std::size_t h = static_cast<std::size_t>(heads), d = values.cols() / h;
  Matrix y = values.value();
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t a = 0; a < h; ++a)
      for (std::size_t j = 0; j < d; ++j) y(r, a * d + j) *= weights.value()(r, a);
  return t.push(std::move(y), any_grad({values, weights}), [values, weights, h, d](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& vv = t.value(values.id);
    const Matrix& vw = t.value(weights.id);
    if (t.requires_grad(values.id)) {
      Matrix& gv = t.grad(values.id);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t a = 0; a < h; ++a)
          for (std::size_t j = 0; j < d; ++j) gv(r, a * d + j) += g(r, a * d + j) * vw(r, a);
    }
    if (t.requires_grad(weights.id)) {
      Matrix& gw = t.grad(weights.id);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t a = 0; a < h; ++a) {
          double s = 0.0;
          for (std::size_t j = 0; j < d; ++j) s += g(r, a * d + j) * vv(r, a * d + j);
          gw(r, a) += s;
        }
    }
  });
}

}  // namespace galgraph::ad
