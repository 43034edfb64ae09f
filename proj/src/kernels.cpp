#include "galgraph/kernels.hpp"

#include <stdexcept>

#include "galgraph/parallel.hpp"

namespace galgraph::kernels {

namespace {

void check_nn(const Matrix& a, const Matrix& b, const Matrix& c) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols())
    throw std::invalid_argument("gemm_nn: shape mismatch " + a.shape_string() + " * " + b.shape_string() +
                                " -> " + c.shape_string());
}
void check_nt(const Matrix& a, const Matrix& b, const Matrix& c) {
  if (a.cols() != b.cols() || c.rows() != a.rows() || c.cols() != b.rows())
    throw std::invalid_argument("gemm_nt: shape mismatch " + a.shape_string() + " * " + b.shape_string() +
                                "^T -> " + c.shape_string());
}
void check_tn(const Matrix& a, const Matrix& b, const Matrix& c) {
  if (a.rows() != b.rows() || c.rows() != a.cols() || c.cols() != b.cols())
    throw std::invalid_argument("gemm_tn: shape mismatch " + a.shape_string() + "^T * " + b.shape_string() +
                                " -> " + c.shape_string());
}

inline void row_nn(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  const std::size_t inner = a.cols(), m = b.cols();
  double* crow = c.data() + i * m;
  const double* arow = a.data() + i * inner;
  for (std::size_t k = 0; k < inner; ++k) {
    const double av = arow[k];
    if (av == 0.0) continue;
    const double* brow = b.data() + k * m;
    for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
  }
}

inline void row_nt(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  const std::size_t inner = a.cols(), m = b.rows();
  const double* arow = a.data() + i * inner;
  double* crow = c.data() + i * m;
  for (std::size_t j = 0; j < m; ++j) {
    const double* brow = b.data() + j * inner;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t k = 0;
    for (; k + 4 <= inner; k += 4) {
      s0 += arow[k] * brow[k];
      s1 += arow[k + 1] * brow[k + 1];
      s2 += arow[k + 2] * brow[k + 2];
      s3 += arow[k + 3] * brow[k + 3];
    }
    for (; k < inner; ++k) s0 += arow[k] * brow[k];
    crow[j] += (s0 + s1) + (s2 + s3);
  }
}

// c(i, :) += sum_r a(r, i) * b(r, :), r ascending.
inline void row_tn(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  const std::size_t n = a.rows(), ac = a.cols(), m = b.cols();
  double* crow = c.data() + i * m;
  for (std::size_t r = 0; r < n; ++r) {
    const double av = a.data()[r * ac + i];
    if (av == 0.0) continue;
    const double* brow = b.data() + r * m;
    for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
  }
}

constexpr std::size_t kParallelThreshold = 1 << 15;  // multiply-adds

}  // namespace

namespace serial {
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  check_nn(a, b, c);
  for (std::size_t i = 0; i < a.rows(); ++i) row_nn(a, b, c, i);
}
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  check_nt(a, b, c);
  for (std::size_t i = 0; i < a.rows(); ++i) row_nt(a, b, c, i);
}
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  check_tn(a, b, c);
  for (std::size_t i = 0; i < a.cols(); ++i) row_tn(a, b, c, i);
}
}  // namespace serial

namespace omp {
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  check_nn(a, b, c);
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
  GALGRAPH_PARALLEL_FOR
  for (std::ptrdiff_t i = 0; i < n; ++i) row_nn(a, b, c, static_cast<std::size_t>(i));
}
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  check_nt(a, b, c);
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
  GALGRAPH_PARALLEL_FOR
  for (std::ptrdiff_t i = 0; i < n; ++i) row_nt(a, b, c, static_cast<std::size_t>(i));
}
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  check_tn(a, b, c);
  const auto n = static_cast<std::ptrdiff_t>(a.cols());
  GALGRAPH_PARALLEL_FOR
  for (std::ptrdiff_t i = 0; i < n; ++i) row_tn(a, b, c, static_cast<std::size_t>(i));
}
}  // namespace omp

namespace {
bool use_parallel(std::size_t work) {
  return openmp_enabled() && max_threads() > 1 && work >= kParallelThreshold;
}
}  // namespace

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  if (use_parallel(a.rows() * a.cols() * b.cols())) omp::gemm_nn(a, b, c);
  else serial::gemm_nn(a, b, c);
}
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  if (use_parallel(a.rows() * a.cols() * b.rows())) omp::gemm_nt(a, b, c);
  else serial::gemm_nt(a, b, c);
}
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  if (use_parallel(a.rows() * a.cols() * b.cols())) omp::gemm_tn(a, b, c);
  else serial::gemm_tn(a, b, c);
}

}  // namespace galgraph::kernels
