#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "galgraph/geometry.hpp"
#include "galgraph/matrix.hpp"

namespace galgraph {

/// Highest angular degree supported by the closed-form harmonics.
inline constexpr int kMaxDegree = 2;

using Mat3 = std::array<std::array<double, 3>, 3>;

/// `mul` copies of the irrep of degree `l` and parity `p` (+1 even, -1 odd).
struct MulIrrep {
  int mul = 1;
  int l = 0;
  int p = 1;
  int ir_dim() const { return 2 * l + 1; }
  int dim() const { return mul * (2 * l + 1); }
  bool same_irrep(const MulIrrep& o) const { return l == o.l && p == o.p; }
  friend bool operator==(const MulIrrep&, const MulIrrep&) = default;
};

/// Ordered direct sum of irreps. Feature rows are laid out block by block in
/// this order; inside a block channel u occupies [u*(2l+1), (u+1)*(2l+1)) with
/// m running -l..l.
class Irreps {
 public:
  Irreps() = default;
  Irreps(std::vector<MulIrrep> items);

  /// e.g. "16x0e+4x1o+2x2e"; a missing multiplicity means 1.
  static Irreps parse(std::string_view text);
  /// 1x0e + 1x1o + ... + 1x(lmax)(parity (-1)^l): the layout of spherical_harmonics.
  static Irreps spherical_harmonics(int lmax);

  std::string str() const;
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const MulIrrep& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  int dim() const;
  int offset(std::size_t block) const { return offsets_[block]; }
  int lmax() const;
  /// Total multiplicity of 0e blocks.
  int n_scalars() const;
  /// Column indices of all 0e channels, in layout order.
  std::vector<int> scalar_columns() const;
  Irreps operator+(const Irreps& o) const;

  friend bool operator==(const Irreps& a, const Irreps& b) { return a.items_ == b.items_; }

 private:
  std::vector<MulIrrep> items_;
  std::vector<int> offsets_;
};

struct SteerableFeature {
  Irreps irreps;
  std::vector<double> data;
  void validate() const;
};

/// Real spherical harmonics Y_lm(dir), l = 0..lmax, integral-normalized.
/// Component order per l is m = -l..l, which for l = 1 is (y, z, x).
std::vector<double> spherical_harmonics(const Vec3& direction, int lmax);
/// Same, writing (lmax+1)^2 values to `out`. `direction` must be unit length.
void spherical_harmonics_into(const Vec3& direction, int lmax, double* out);

/// Index of the (x, y, z) component inside the l = 1 block.
inline constexpr std::array<int, 3> kVectorSlot = {2, 0, 1};

double determinant(const Mat3& r);
/// Throws unless r is orthogonal to 1e-9.
void check_orthogonal(const Mat3& r);

/// D^l(R) for an irrep of parity p, (2l+1) x (2l+1). For R with det -1 the
/// proper part -R is used and the block is multiplied by p. With p = (-1)^l
/// this satisfies Y_l(R r) = D^l(R) Y_l(r).
Matrix wigner_d(int l, int parity, const Mat3& rotation);
/// Block-diagonal D for the spherical-harmonic layout up to lmax.
Matrix wigner_d(int lmax, const Mat3& rotation);
/// Apply D(R) block by block to a feature row laid out as `irreps`.
std::vector<double> rotate(const Irreps& irreps, const Mat3& rotation, std::span<const double> row);

/// Real-basis coupling tensor C[m1][m2][m3] (flattened, m3 fastest). Empty when
/// the triangle rule fails or a degree exceeds kMaxDegree. Normalized so that
/// sum_{m1 m2} C[m1 m2 m3] C[m1 m2 m3'] = delta(m3, m3').
const std::vector<double>& clebsch_gordan(int l1, int l2, int l3);

/// Complex-basis <l1 m1 l2 m2 | l3 m3> by the Racah formula.
double clebsch_gordan_complex(int l1, int m1, int l2, int m2, int l3, int m3);

/// Fully connected weighted CG product: every allowed (block1, block2 -> out
/// block) path carries mul1*mul2*mul3 weights, and each output block is scaled
/// by 1/sqrt(sum of mul1*mul2 over its paths).
class TensorProduct {
 public:
  struct Path {
    int in1, in2, out;
    int l1, l2, l3;
    int mul1, mul2, mul3;
    std::size_t weight_offset;
    double norm;
  };

  TensorProduct(Irreps in1, Irreps in2, Irreps out);

  const Irreps& in1() const { return in1_; }
  const Irreps& in2() const { return in2_; }
  const Irreps& out() const { return out_; }
  std::size_t weight_count() const { return n_weights_; }
  const std::vector<Path>& paths() const { return paths_; }

  /// out += TP(a, b; w) for one row.
  void forward(const double* a, const double* b, const double* w, double* out) const;
  /// Accumulates into whichever of ga, gb, gw is non-null.
  void backward(const double* a, const double* b, const double* w, const double* grad_out, double* ga,
                double* gb, double* gw) const;

  /// Same as forward/backward over `rows` contiguous rows, with each path
  /// contracted against its weights as one dense product.
  void forward_rows(std::size_t rows, const double* a, const double* b, const double* w, double* out) const;
  void backward_rows(std::size_t rows, const double* a, const double* b, const double* w, const double* grad_out,
                     double* ga, double* gb, double* gw) const;

 private:
  Irreps in1_, in2_, out_;
  std::vector<Path> paths_;
  std::size_t n_weights_ = 0;
};

/// Channel-wise ("uvu") CG product whose weights are supplied per row, used by
/// NequIP with radial-MLP weights. in2 blocks must have multiplicity 1; every
/// allowed path (block1, block2 -> l3) emits mul1 channels in the output,
/// in path order.
class ChannelwiseTensorProduct {
 public:
  struct Path {
    int in1, in2;
    int l1, l2, l3, p3;
    int mul;
    std::size_t weight_offset;
    int out_offset;
  };

  ChannelwiseTensorProduct(Irreps in1, Irreps in2, int lmax_out);

  const Irreps& in1() const { return in1_; }
  const Irreps& in2() const { return in2_; }
  const Irreps& out() const { return out_; }
  std::size_t weight_count() const { return n_weights_; }
  const std::vector<Path>& paths() const { return paths_; }

  void forward(const double* a, const double* b, const double* w, double* out) const;
  void backward(const double* a, const double* b, const double* w, const double* grad_out, double* ga,
                double* gb, double* gw) const;

 private:
  Irreps in1_, in2_, out_;
  std::vector<Path> paths_;
  std::size_t n_weights_ = 0;
};

/// Mixes channels of equal (l, p) between two layouts. Every output block
/// must have at least one matching input block.
class EquivariantLinear {
 public:
  struct Path {
    int in, out;
    int l;
    int mul_in, mul_out;
    std::size_t weight_offset;
    double norm;
  };

  EquivariantLinear(Irreps in, Irreps out);

  const Irreps& in() const { return in_; }
  const Irreps& out() const { return out_; }
  std::size_t weight_count() const { return n_weights_; }
  const std::vector<Path>& paths() const { return paths_; }

  void forward(const double* x, const double* w, double* out) const;
  void backward(const double* x, const double* w, const double* grad_out, double* gx, double* gw) const;

 private:
  Irreps in_, out_;
  std::vector<Path> paths_;
  std::size_t n_weights_ = 0;
};

/// Gated nonlinearity. Input layout: `scalars` (0e), then one 0e gate per
/// gated channel, then `gated` (l > 0). Scalars go through GELU; gated
/// channel c is multiplied by sigmoid(gate c). Output layout: scalars + gated.
class Gate {
 public:
  Gate(int n_scalars, Irreps gated);

  const Irreps& in() const { return in_; }
  const Irreps& out() const { return out_; }
  int n_scalars() const { return n_scalars_; }
  int n_gates() const { return n_gates_; }

  void forward(const double* x, double* out) const;
  void backward(const double* x, const double* grad_out, double* gx) const;

 private:
  int n_scalars_ = 0;
  int n_gates_ = 0;
  Irreps gated_;
  Irreps in_, out_;
};

/// Layout that a Gate consumes to produce `hidden`: scalar part of `hidden`,
/// then the gates, then its nonscalar blocks. `hidden` must list its 0e
/// blocks first.
Irreps gate_input_irreps(const Irreps& hidden);

/// Free-function form of the CG product.
SteerableFeature tensor_product(const SteerableFeature& a, const SteerableFeature& b,
                                std::span<const double> weights, const Irreps& out);
/// The trailing scalar channels (one per nonscalar channel) act as gates; the
/// leading ones pass through GELU. Throws when there are too few scalars.
SteerableFeature gated_nonlinearity(const SteerableFeature& f);

}  // namespace galgraph
