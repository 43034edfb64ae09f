#include <cmath>
#include <numbers>
#include <stdexcept>

#include "galgraph/harmonics.hpp"

namespace galgraph {

namespace {

const double kC0 = 0.5 / std::sqrt(std::numbers::pi);
const double kC1 = std::sqrt(3.0 / (4.0 * std::numbers::pi));
const double kC2 = 0.5 * std::sqrt(15.0 / std::numbers::pi);
const double kC20 = 0.25 * std::sqrt(5.0 / std::numbers::pi);
const double kC22 = 0.25 * std::sqrt(15.0 / std::numbers::pi);

// Y_2m(r) = r^T Q_m r for unit r.
Mat3 quadratic_form(int m) {
  Mat3 q{};
  switch (m) {
    case -2: q[0][1] = q[1][0] = 0.5 * kC2; break;
    case -1: q[1][2] = q[2][1] = 0.5 * kC2; break;
    case 0: q[0][0] = -kC20; q[1][1] = -kC20; q[2][2] = 2.0 * kC20; break;
    case 1: q[0][2] = q[2][0] = 0.5 * kC2; break;
    case 2: q[0][0] = kC22; q[1][1] = -kC22; break;
    default: break;
  }
  return q;
}

double frobenius(const Mat3& a, const Mat3& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += a[i][j] * b[i][j];
  return s;
}

Mat3 congruence(const Mat3& r, const Mat3& q) {  // r^T q r
  Mat3 t{}, out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) t[i][j] += q[i][k] * r[k][j];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out[i][j] += r[k][i] * t[k][j];
  return out;
}

}  // namespace

void spherical_harmonics_into(const Vec3& d, int lmax, double* out) {
  if (lmax < 0 || lmax > kMaxDegree) throw std::invalid_argument("spherical_harmonics: lmax must be in 0..2");
  const double x = d[0], y = d[1], z = d[2];
  out[0] = kC0;
  if (lmax >= 1) {
    out[1] = kC1 * y;
    out[2] = kC1 * z;
    out[3] = kC1 * x;
  }
  if (lmax >= 2) {
    out[4] = kC2 * x * y;
    out[5] = kC2 * y * z;
    out[6] = kC20 * (3.0 * z * z - 1.0);
    out[7] = kC2 * x * z;
    out[8] = kC22 * (x * x - y * y);
  }
}

std::vector<double> spherical_harmonics(const Vec3& direction, int lmax) {
  const double n = norm(direction);
  if (n == 0.0) throw std::invalid_argument("spherical_harmonics: zero direction vector");
  if (std::abs(n - 1.0) > 1e-9) throw std::invalid_argument("spherical_harmonics: direction is not unit length");
  std::vector<double> out(static_cast<std::size_t>((lmax + 1) * (lmax + 1)));
  spherical_harmonics_into(direction, lmax, out.data());
  return out;
}

double determinant(const Mat3& r) {
  return r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0]) +
         r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
}

void check_orthogonal(const Mat3& r) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += r[k][i] * r[k][j];
      if (std::abs(s - (i == j ? 1.0 : 0.0)) > 1e-9) throw std::invalid_argument("wigner_d: matrix is not orthogonal");
    }
}

Matrix wigner_d(int l, int parity, const Mat3& rotation) {
  check_orthogonal(rotation);
  if (l < 0 || l > kMaxDegree) throw std::invalid_argument("wigner_d: degree out of range");
  const double det = determinant(rotation);
  Mat3 proper = rotation;
  if (det < 0)
    for (auto& row : proper)
      for (double& v : row) v = -v;
  Matrix d(2 * l + 1, 2 * l + 1);
  if (l == 0) {
    d(0, 0) = 1.0;
  } else if (l == 1) {
    // Y_1 = c (y, z, x): D = P R P^T with P selecting (y, z, x).
    constexpr int perm[3] = {1, 2, 0};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) d(a, b) = proper[perm[a]][perm[b]];
  } else {
    std::array<Mat3, 5> q;
    std::array<double, 5> qq{};
    for (int m = -2; m <= 2; ++m) {
      q[m + 2] = quadratic_form(m);
      qq[m + 2] = frobenius(q[m + 2], q[m + 2]);
    }
    for (int m = 0; m < 5; ++m) {
      const Mat3 rqr = congruence(proper, q[m]);
      for (int n = 0; n < 5; ++n) d(m, n) = frobenius(q[n], rqr) / qq[n];
    }
  }
  if (det < 0 && parity < 0)
    for (double& v : d.values()) v = -v;
  return d;
}

Matrix wigner_d(int lmax, const Mat3& rotation) {
  const int dim = (lmax + 1) * (lmax + 1);
  Matrix out(dim, dim);
  int off = 0;
  for (int l = 0; l <= lmax; ++l) {
    const Matrix block = wigner_d(l, (l % 2 == 0) ? 1 : -1, rotation);
    for (int a = 0; a < 2 * l + 1; ++a)
      for (int b = 0; b < 2 * l + 1; ++b) out(off + a, off + b) = block(a, b);
    off += 2 * l + 1;
  }
  return out;
}

std::vector<double> rotate(const Irreps& irreps, const Mat3& rotation, std::span<const double> row) {
  if (static_cast<int>(row.size()) != irreps.dim()) throw std::invalid_argument("rotate: row does not match irreps");
  std::vector<double> out(row.size(), 0.0);
  for (std::size_t b = 0; b < irreps.size(); ++b) {
    const auto& ir = irreps[b];
    const Matrix d = wigner_d(ir.l, ir.p, rotation);
    const int n = ir.ir_dim();
    for (int u = 0; u < ir.mul; ++u) {
      const int base = irreps.offset(b) + u * n;
      for (int a = 0; a < n; ++a) {
        double s = 0.0;
        for (int c = 0; c < n; ++c) s += d(a, c) * row[base + c];
        out[base + a] = s;
      }
    }
  }
  return out;
}

}  // namespace galgraph
