#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "galgraph/activations.hpp"
#include "galgraph/harmonics.hpp"
#include "galgraph/kernels.hpp"

namespace galgraph {

namespace {

struct CgEntry {
  int m1, m2, m3;
  double value;
};

const std::vector<CgEntry>& sparse_cg(int l1, int l2, int l3) {
  static const auto table = [] {
    std::array<std::vector<CgEntry>, 27> t;
    for (int a = 0; a <= kMaxDegree; ++a)
      for (int b = 0; b <= kMaxDegree; ++b)
        for (int c = 0; c <= kMaxDegree; ++c) {
          const auto& dense = clebsch_gordan(a, b, c);
          if (dense.empty()) continue;
          const int n2 = 2 * b + 1, n3 = 2 * c + 1;
          for (std::size_t i = 0; i < dense.size(); ++i)
            if (dense[i] != 0.0) {
              const int m3 = static_cast<int>(i) % n3;
              const int m2 = (static_cast<int>(i) / n3) % n2;
              const int m1 = static_cast<int>(i) / (n3 * n2);
              t[(a * 3 + b) * 3 + c].push_back({m1, m2, m3, dense[i]});
            }
        }
    return t;
  }();
  return table[(l1 * 3 + l2) * 3 + l3];
}

bool coupling_allowed(int l1, int p1, int l2, int p2, int l3, int p3) {
  return l3 >= std::abs(l1 - l2) && l3 <= l1 + l2 && p1 * p2 == p3 && l3 <= kMaxDegree;
}

}  // namespace

// ---------------------------------------------------------------- TensorProduct

TensorProduct::TensorProduct(Irreps in1, Irreps in2, Irreps out)
    : in1_(std::move(in1)), in2_(std::move(in2)), out_(std::move(out)) {
  std::vector<int> fan_in(out_.size(), 0);
  for (std::size_t o = 0; o < out_.size(); ++o) {
    for (std::size_t i = 0; i < in1_.size(); ++i)
      for (std::size_t j = 0; j < in2_.size(); ++j) {
        const auto &a = in1_[i], &b = in2_[j], &c = out_[o];
        if (!coupling_allowed(a.l, a.p, b.l, b.p, c.l, c.p)) continue;
        paths_.push_back({static_cast<int>(i), static_cast<int>(j), static_cast<int>(o), a.l, b.l, c.l, a.mul, b.mul,
                          c.mul, n_weights_, 0.0});
        n_weights_ += static_cast<std::size_t>(a.mul) * b.mul * c.mul;
        fan_in[o] += a.mul * b.mul;
      }
    if (fan_in[o] == 0)
      throw std::invalid_argument("TensorProduct: no allowed path produces output block " +
                                  std::to_string(out_[o].l) + (out_[o].p > 0 ? "e" : "o") + " from " + in1_.str() +
                                  " x " + in2_.str());
  }
  for (auto& p : paths_) p.norm = 1.0 / std::sqrt(static_cast<double>(fan_in[p.out]));
}

void TensorProduct::forward(const double* a, const double* b, const double* w, double* out) const {
  std::array<double, 5> t{};
  for (const auto& p : paths_) {
    const auto& cg = sparse_cg(p.l1, p.l2, p.l3);
    const int d1 = 2 * p.l1 + 1, d2 = 2 * p.l2 + 1, d3 = 2 * p.l3 + 1;
    const double* ab = a + in1_.offset(p.in1);
    const double* bb = b + in2_.offset(p.in2);
    double* ob = out + out_.offset(p.out);
    for (int u = 0; u < p.mul1; ++u)
      for (int v = 0; v < p.mul2; ++v) {
        t.fill(0.0);
        for (const auto& e : cg) t[e.m3] += e.value * ab[u * d1 + e.m1] * bb[v * d2 + e.m2];
        const double* wr = w + p.weight_offset + static_cast<std::size_t>(u * p.mul2 + v) * p.mul3;
        for (int k = 0; k < p.mul3; ++k) {
          const double s = p.norm * wr[k];
          for (int m = 0; m < d3; ++m) ob[k * d3 + m] += s * t[m];
        }
      }
  }
}

void TensorProduct::backward(const double* a, const double* b, const double* w, const double* grad_out, double* ga,
                             double* gb, double* gw) const {
  std::array<double, 5> t{}, gt{};
  for (const auto& p : paths_) {
    const auto& cg = sparse_cg(p.l1, p.l2, p.l3);
    const int d1 = 2 * p.l1 + 1, d2 = 2 * p.l2 + 1, d3 = 2 * p.l3 + 1;
    const double* ab = a + in1_.offset(p.in1);
    const double* bb = b + in2_.offset(p.in2);
    const double* go = grad_out + out_.offset(p.out);
    for (int u = 0; u < p.mul1; ++u)
      for (int v = 0; v < p.mul2; ++v) {
        const std::size_t wbase = p.weight_offset + static_cast<std::size_t>(u * p.mul2 + v) * p.mul3;
        gt.fill(0.0);
        for (int k = 0; k < p.mul3; ++k) {
          const double s = p.norm * w[wbase + k];
          for (int m = 0; m < d3; ++m) gt[m] += s * go[k * d3 + m];
        }
        if (gw) {
          t.fill(0.0);
          for (const auto& e : cg) t[e.m3] += e.value * ab[u * d1 + e.m1] * bb[v * d2 + e.m2];
          for (int k = 0; k < p.mul3; ++k) {
            double s = 0.0;
            for (int m = 0; m < d3; ++m) s += t[m] * go[k * d3 + m];
            gw[wbase + k] += p.norm * s;
          }
        }
        if (ga) {
          double* gab = ga + in1_.offset(p.in1);
          for (const auto& e : cg) gab[u * d1 + e.m1] += e.value * bb[v * d2 + e.m2] * gt[e.m3];
        }
        if (gb) {
          double* gbb = gb + in2_.offset(p.in2);
          for (const auto& e : cg) gbb[v * d2 + e.m2] += e.value * ab[u * d1 + e.m1] * gt[e.m3];
        }
      }
  }
}

namespace {

// mul1 * mul2 by rows * d3 matrix of CG-coupled input pairs for one path;
// rows run along the long axis so the weight contraction vectorizes.
Matrix coupled_pairs(const TensorProduct::Path& p, std::size_t rows, const double* a, int lda, int off1,
                     const double* b, int ldb, int off2) {
  const auto& cg = sparse_cg(p.l1, p.l2, p.l3);
  const int d1 = 2 * p.l1 + 1, d2 = 2 * p.l2 + 1;
  const std::size_t d3 = static_cast<std::size_t>(2 * p.l3 + 1), n = rows * d3;
  Matrix t(static_cast<std::size_t>(p.mul1 * p.mul2), n, 0.0);
  for (int u = 0; u < p.mul1; ++u)
    for (int v = 0; v < p.mul2; ++v) {
      double* tr = t.data() + static_cast<std::size_t>(u * p.mul2 + v) * n;
      for (const auto& e : cg) {
        const double* ar = a + off1 + u * d1 + e.m1;
        const double* br = b + off2 + v * d2 + e.m2;
        for (std::size_t r = 0; r < rows; ++r)
          tr[r * d3 + static_cast<std::size_t>(e.m3)] += e.value * ar[r * static_cast<std::size_t>(lda)] *
                                                          br[r * static_cast<std::size_t>(ldb)];
      }
    }
  return t;
}

// Path weights as mul1 * mul2 by mul3, scaled by the path norm.
Matrix path_weights(const TensorProduct::Path& p, const double* w) {
  const std::size_t k = static_cast<std::size_t>(p.mul1 * p.mul2), n = static_cast<std::size_t>(p.mul3);
  Matrix m(k, n, std::vector<double>(w + p.weight_offset, w + p.weight_offset + k * n));
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] *= p.norm;
  return m;
}

Matrix transposed(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

}  // namespace

void TensorProduct::forward_rows(std::size_t rows, const double* a, const double* b, const double* w,
                                 double* out) const {
  const int lda = in1_.dim(), ldb = in2_.dim();
  const std::size_t ldo = static_cast<std::size_t>(out_.dim());
  for (const auto& p : paths_) {
    const std::size_t d3 = static_cast<std::size_t>(2 * p.l3 + 1);
    const Matrix t = coupled_pairs(p, rows, a, lda, in1_.offset(p.in1), b, ldb, in2_.offset(p.in2));
    Matrix o(static_cast<std::size_t>(p.mul3), t.cols(), 0.0);
    kernels::gemm_nn(transposed(path_weights(p, w)), t, o);
    double* ob = out + out_.offset(p.out);
    for (std::size_t c = 0; c < o.rows(); ++c) {
      const double* src = o.data() + c * o.cols();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t m = 0; m < d3; ++m) ob[r * ldo + c * d3 + m] += src[r * d3 + m];
    }
  }
}

void TensorProduct::backward_rows(std::size_t rows, const double* a, const double* b, const double* w,
                                  const double* grad_out, double* ga, double* gb, double* gw) const {
  const int lda = in1_.dim(), ldb = in2_.dim();
  const std::size_t ldo = static_cast<std::size_t>(out_.dim());
  for (const auto& p : paths_) {
    const auto& cg = sparse_cg(p.l1, p.l2, p.l3);
    const int d1 = 2 * p.l1 + 1, d2 = 2 * p.l2 + 1;
    const std::size_t d3 = static_cast<std::size_t>(2 * p.l3 + 1), n = rows * d3;
    const int off1 = in1_.offset(p.in1), off2 = in2_.offset(p.in2);
    const double* gob = grad_out + out_.offset(p.out);
    Matrix g(static_cast<std::size_t>(p.mul3), n);
    for (std::size_t c = 0; c < g.rows(); ++c) {
      double* dst = g.data() + c * n;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t m = 0; m < d3; ++m) dst[r * d3 + m] = gob[r * ldo + c * d3 + m];
    }
    if (gw) {
      const Matrix t = coupled_pairs(p, rows, a, lda, off1, b, ldb, off2);
      Matrix gwp(t.rows(), g.rows(), 0.0);
      kernels::gemm_nt(t, g, gwp);
      for (std::size_t i = 0; i < gwp.size(); ++i) gw[p.weight_offset + i] += p.norm * gwp.data()[i];
    }
    if (!ga && !gb) continue;
    Matrix gt(static_cast<std::size_t>(p.mul1 * p.mul2), n, 0.0);
    kernels::gemm_nn(path_weights(p, w), g, gt);
    for (int u = 0; u < p.mul1; ++u)
      for (int v = 0; v < p.mul2; ++v) {
        const double* gtr = gt.data() + static_cast<std::size_t>(u * p.mul2 + v) * n;
        for (const auto& e : cg) {
          const std::size_t ia = static_cast<std::size_t>(off1 + u * d1 + e.m1);
          const std::size_t ib = static_cast<std::size_t>(off2 + v * d2 + e.m2);
          for (std::size_t r = 0; r < rows; ++r) {
            const double gv = e.value * gtr[r * d3 + static_cast<std::size_t>(e.m3)];
            if (ga) ga[r * lda + ia] += gv * b[r * ldb + ib];
            if (gb) gb[r * ldb + ib] += gv * a[r * lda + ia];
          }
        }
      }
  }
}

// ----------------------------------------------------- ChannelwiseTensorProduct

ChannelwiseTensorProduct::ChannelwiseTensorProduct(Irreps in1, Irreps in2, int lmax_out)
    : in1_(std::move(in1)), in2_(std::move(in2)) {
  std::vector<MulIrrep> out;
  int off = 0;
  for (std::size_t i = 0; i < in1_.size(); ++i)
    for (std::size_t j = 0; j < in2_.size(); ++j) {
      const auto &a = in1_[i], &b = in2_[j];
      if (b.mul != 1) throw std::invalid_argument("ChannelwiseTensorProduct: second operand needs multiplicity 1");
      for (int l3 = std::abs(a.l - b.l); l3 <= std::min(a.l + b.l, lmax_out); ++l3) {
        const int p3 = a.p * b.p;
        paths_.push_back({static_cast<int>(i), static_cast<int>(j), a.l, b.l, l3, p3, a.mul, n_weights_, off});
        n_weights_ += static_cast<std::size_t>(a.mul);
        out.push_back({a.mul, l3, p3});
        off += a.mul * (2 * l3 + 1);
      }
    }
  if (paths_.empty()) throw std::invalid_argument("ChannelwiseTensorProduct: no allowed paths");
  out_ = Irreps(std::move(out));
}

void ChannelwiseTensorProduct::forward(const double* a, const double* b, const double* w, double* out) const {
  for (const auto& p : paths_) {
    const auto& cg = sparse_cg(p.l1, p.l2, p.l3);
    const int d1 = 2 * p.l1 + 1, d3 = 2 * p.l3 + 1;
    const double* ab = a + in1_.offset(p.in1);
    const double* bb = b + in2_.offset(p.in2);
    double* ob = out + p.out_offset;
    for (int u = 0; u < p.mul; ++u) {
      const double s = w[p.weight_offset + u];
      for (const auto& e : cg) ob[u * d3 + e.m3] += s * e.value * ab[u * d1 + e.m1] * bb[e.m2];
    }
  }
}

void ChannelwiseTensorProduct::backward(const double* a, const double* b, const double* w, const double* grad_out,
                                        double* ga, double* gb, double* gw) const {
  for (const auto& p : paths_) {
    const auto& cg = sparse_cg(p.l1, p.l2, p.l3);
    const int d1 = 2 * p.l1 + 1, d3 = 2 * p.l3 + 1;
    const double* ab = a + in1_.offset(p.in1);
    const double* bb = b + in2_.offset(p.in2);
    const double* go = grad_out + p.out_offset;
    for (int u = 0; u < p.mul; ++u) {
      const double s = w[p.weight_offset + u];
      double dw = 0.0;
      for (const auto& e : cg) {
        const double g = go[u * d3 + e.m3] * e.value;
        dw += g * ab[u * d1 + e.m1] * bb[e.m2];
        if (ga) ga[in1_.offset(p.in1) + u * d1 + e.m1] += s * g * bb[e.m2];
        if (gb) gb[in2_.offset(p.in2) + e.m2] += s * g * ab[u * d1 + e.m1];
      }
      if (gw) gw[p.weight_offset + u] += dw;
    }
  }
}

// ------------------------------------------------------------ EquivariantLinear

EquivariantLinear::EquivariantLinear(Irreps in, Irreps out) : in_(std::move(in)), out_(std::move(out)) {
  for (std::size_t o = 0; o < out_.size(); ++o) {
    int fan_in = 0;
    const std::size_t first = paths_.size();
    for (std::size_t i = 0; i < in_.size(); ++i) {
      if (!in_[i].same_irrep(out_[o])) continue;
      paths_.push_back({static_cast<int>(i), static_cast<int>(o), in_[i].l, in_[i].mul, out_[o].mul, n_weights_, 0.0});
      n_weights_ += static_cast<std::size_t>(in_[i].mul) * out_[o].mul;
      fan_in += in_[i].mul;
    }
    if (fan_in == 0)
      throw std::invalid_argument("EquivariantLinear: no input block matches " + std::to_string(out_[o].l) +
                                  (out_[o].p > 0 ? "e" : "o") + " in " + in_.str());
    for (std::size_t q = first; q < paths_.size(); ++q) paths_[q].norm = 1.0 / std::sqrt(static_cast<double>(fan_in));
  }
}

void EquivariantLinear::forward(const double* x, const double* w, double* out) const {
  for (const auto& p : paths_) {
    const int d = 2 * p.l + 1;
    const double* xb = x + in_.offset(p.in);
    double* ob = out + out_.offset(p.out);
    for (int u = 0; u < p.mul_in; ++u) {
      const double* wr = w + p.weight_offset + static_cast<std::size_t>(u) * p.mul_out;
      for (int k = 0; k < p.mul_out; ++k) {
        const double s = p.norm * wr[k];
        for (int m = 0; m < d; ++m) ob[k * d + m] += s * xb[u * d + m];
      }
    }
  }
}

void EquivariantLinear::backward(const double* x, const double* w, const double* grad_out, double* gx,
                                 double* gw) const {
  for (const auto& p : paths_) {
    const int d = 2 * p.l + 1;
    const double* xb = x + in_.offset(p.in);
    const double* go = grad_out + out_.offset(p.out);
    for (int u = 0; u < p.mul_in; ++u) {
      const std::size_t wbase = p.weight_offset + static_cast<std::size_t>(u) * p.mul_out;
      for (int k = 0; k < p.mul_out; ++k) {
        if (gw) {
          double s = 0.0;
          for (int m = 0; m < d; ++m) s += xb[u * d + m] * go[k * d + m];
          gw[wbase + k] += p.norm * s;
        }
        if (gx) {
          const double s = p.norm * w[wbase + k];
          double* gxb = gx + in_.offset(p.in);
          for (int m = 0; m < d; ++m) gxb[u * d + m] += s * go[k * d + m];
        }
      }
    }
  }
}

// ------------------------------------------------------------------------ Gate

Gate::Gate(int n_scalars, Irreps gated) : n_scalars_(n_scalars), gated_(std::move(gated)) {
  if (n_scalars_ < 0) throw std::invalid_argument("Gate: negative scalar count");
  for (const auto& ir : gated_) {
    if (ir.l == 0) throw std::invalid_argument("Gate: gated blocks must have l > 0");
    n_gates_ += ir.mul;
  }
  std::vector<MulIrrep> in_items, out_items;
  if (n_scalars_ > 0) {
    in_items.push_back({n_scalars_, 0, 1});
    out_items.push_back({n_scalars_, 0, 1});
  }
  if (n_gates_ > 0) in_items.push_back({n_gates_, 0, 1});
  for (const auto& ir : gated_) {
    in_items.push_back(ir);
    out_items.push_back(ir);
  }
  in_ = Irreps(std::move(in_items));
  out_ = Irreps(std::move(out_items));
}

void Gate::forward(const double* x, double* out) const {
  for (int s = 0; s < n_scalars_; ++s) out[s] = gelu(x[s]);
  const double* gates = x + n_scalars_;
  const double* src = gates + n_gates_;
  double* dst = out + n_scalars_;
  int channel = 0;
  for (const auto& ir : gated_) {
    const int d = ir.ir_dim();
    for (int u = 0; u < ir.mul; ++u, ++channel) {
      const double g = sigmoid(gates[channel]);
      for (int m = 0; m < d; ++m) dst[m] = g * src[m];
      src += d;
      dst += d;
    }
  }
}

void Gate::backward(const double* x, const double* grad_out, double* gx) const {
  for (int s = 0; s < n_scalars_; ++s) gx[s] += gelu_grad(x[s]) * grad_out[s];
  const double* gates = x + n_scalars_;
  double* ggates = gx + n_scalars_;
  const double* src = gates + n_gates_;
  double* gsrc = ggates + n_gates_;
  const double* go = grad_out + n_scalars_;
  int channel = 0;
  for (const auto& ir : gated_) {
    const int d = ir.ir_dim();
    for (int u = 0; u < ir.mul; ++u, ++channel) {
      const double g = sigmoid(gates[channel]);
      double dot_go = 0.0;
      for (int m = 0; m < d; ++m) {
        gsrc[m] += g * go[m];
        dot_go += src[m] * go[m];
      }
      ggates[channel] += g * (1.0 - g) * dot_go;
      src += d;
      gsrc += d;
      go += d;
    }
  }
}

Irreps gate_input_irreps(const Irreps& hidden) {
  int scalars = 0;
  std::vector<MulIrrep> gated;
  for (const auto& ir : hidden) {
    if (ir.l == 0) {
      if (ir.p != 1) throw std::invalid_argument("gate_input_irreps: odd scalars are not supported");
      if (!gated.empty()) throw std::invalid_argument("gate_input_irreps: scalars must precede nonscalar blocks");
      scalars += ir.mul;
    } else {
      gated.push_back(ir);
    }
  }
  return Gate(scalars, Irreps(gated)).in();
}

SteerableFeature tensor_product(const SteerableFeature& a, const SteerableFeature& b,
                                std::span<const double> weights, const Irreps& out) {
  a.validate();
  b.validate();
  const TensorProduct tp(a.irreps, b.irreps, out);
  if (weights.size() != tp.weight_count())
    throw std::invalid_argument("tensor_product: expected " + std::to_string(tp.weight_count()) + " weights, got " +
                                std::to_string(weights.size()));
  SteerableFeature r{out, std::vector<double>(static_cast<std::size_t>(out.dim()), 0.0)};
  tp.forward(a.data.data(), b.data.data(), weights.data(), r.data.data());
  return r;
}

SteerableFeature gated_nonlinearity(const SteerableFeature& f) {
  f.validate();
  int scalars = 0;
  std::vector<MulIrrep> gated;
  for (const auto& ir : f.irreps) {
    if (ir.l == 0) {
      if (ir.p != 1) throw std::invalid_argument("gated_nonlinearity: odd scalars are not supported");
      if (!gated.empty()) throw std::invalid_argument("gated_nonlinearity: scalars must precede nonscalar blocks");
      scalars += ir.mul;
    } else {
      gated.push_back(ir);
    }
  }
  int n_gated = 0;
  for (const auto& ir : gated) n_gated += ir.mul;
  if (scalars < n_gated)
    throw std::invalid_argument("gated_nonlinearity: " + std::to_string(n_gated) + " gated channels need as many "
                                "gate scalars, only " + std::to_string(scalars) + " available");
  const Gate gate(scalars - n_gated, Irreps(gated));
  SteerableFeature r{gate.out(), std::vector<double>(static_cast<std::size_t>(gate.out().dim()), 0.0)};
  gate.forward(f.data.data(), r.data.data());
  return r;
}

}  // namespace galgraph
