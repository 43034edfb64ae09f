#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "galgraph/harmonics.hpp"

namespace galgraph {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

bool triangle(int l1, int l2, int l3) { return l3 >= std::abs(l1 - l2) && l3 <= l1 + l2; }

// Rows: real m = -l..l. Columns: complex mu = -l..l. Y_real = U Y_complex.
std::vector<std::complex<double>> real_from_complex(int l) {
  const int n = 2 * l + 1;
  std::vector<std::complex<double>> u(static_cast<std::size_t>(n * n));
  const double s = 1.0 / std::sqrt(2.0);
  auto at = [&](int m, int mu) -> std::complex<double>& { return u[(m + l) * n + (mu + l)]; };
  for (int m = -l; m <= l; ++m) {
    const double sign = (std::abs(m) % 2 == 0) ? 1.0 : -1.0;
    if (m > 0) {
      at(m, m) = sign * s;
      at(m, -m) = s;
    } else if (m < 0) {
      at(m, m) = std::complex<double>(0.0, s);
      at(m, -m) = std::complex<double>(0.0, -sign * s);
    } else {
      at(0, 0) = 1.0;
    }
  }
  return u;
}

std::vector<double> build_real(int l1, int l2, int l3) {
  const int n1 = 2 * l1 + 1, n2 = 2 * l2 + 1, n3 = 2 * l3 + 1;
  const auto u1 = real_from_complex(l1), u2 = real_from_complex(l2), u3 = real_from_complex(l3);
  std::vector<std::complex<double>> c(static_cast<std::size_t>(n1 * n2 * n3));
  for (int a = 0; a < n1; ++a)
    for (int b = 0; b < n2; ++b)
      for (int cc = 0; cc < n3; ++cc) {
        std::complex<double> s = 0.0;
        for (int i = 0; i < n1; ++i)
          for (int j = 0; j < n2; ++j) {
            const int m3 = (i - l1) + (j - l2);
            if (std::abs(m3) > l3) continue;
            const double cg = clebsch_gordan_complex(l1, i - l1, l2, j - l2, l3, m3);
            if (cg == 0.0) continue;
            s += std::conj(u1[a * n1 + i]) * std::conj(u2[b * n2 + j]) * cg * u3[cc * n3 + (m3 + l3)];
          }
        c[(a * n2 + b) * n3 + cc] = s;
      }
  double re = 0.0, im = 0.0;
  for (const auto& v : c) {
    re += v.real() * v.real();
    im += v.imag() * v.imag();
  }
  // The tensor is purely real or purely imaginary; in the latter case -i * C is real.
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    double v = re >= im ? c[i].real() : c[i].imag();
    if (std::abs(v) < 1e-15) v = 0.0;
    out[i] = v;
  }
  return out;
}

struct Table {
  std::array<std::vector<double>, 27> blocks;
  Table() {
    for (int l1 = 0; l1 <= kMaxDegree; ++l1)
      for (int l2 = 0; l2 <= kMaxDegree; ++l2)
        for (int l3 = 0; l3 <= kMaxDegree; ++l3)
          if (triangle(l1, l2, l3)) blocks[(l1 * 3 + l2) * 3 + l3] = build_real(l1, l2, l3);
  }
};

}  // namespace

double clebsch_gordan_complex(int j1, int m1, int j2, int m2, int j, int m) {
  if (m1 + m2 != m || !triangle(j1, j2, j)) return 0.0;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m) > j) return 0.0;
  const double pre = std::sqrt((2 * j + 1) * factorial(j + j1 - j2) * factorial(j - j1 + j2) *
                               factorial(j1 + j2 - j) / factorial(j1 + j2 + j + 1)) *
                     std::sqrt(factorial(j + m) * factorial(j - m) * factorial(j1 - m1) * factorial(j1 + m1) *
                               factorial(j2 - m2) * factorial(j2 + m2));
  double sum = 0.0;
  for (int k = 0; k <= j1 + j2 + j; ++k) {
    const int d[6] = {j1 + j2 - j - k, j1 - m1 - k, j2 + m2 - k, j - j2 + m1 + k, j - j1 - m2 + k, k};
    bool ok = true;
    for (int v : d) ok = ok && v >= 0;
    if (!ok) continue;
    double den = 1.0;
    for (int v : d) den *= factorial(v);
    sum += ((k % 2 == 0) ? 1.0 : -1.0) / den;
  }
  return pre * sum;
}

const std::vector<double>& clebsch_gordan(int l1, int l2, int l3) {
  static const Table table;
  static const std::vector<double> empty;
  if (l1 < 0 || l2 < 0 || l3 < 0 || l1 > kMaxDegree || l2 > kMaxDegree || l3 > kMaxDegree) return empty;
  return table.blocks[(l1 * 3 + l2) * 3 + l3];
}

}  // namespace galgraph
