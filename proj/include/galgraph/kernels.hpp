#pragma once

#include "galgraph/matrix.hpp"

// Dense products used by the autodiff engine. `serial` is the reference,
// `omp` splits over output rows so each entry keeps the same summation
// order and both variants agree bitwise.

namespace galgraph::kernels {

namespace serial {
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);  // c += a * b
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);  // c += a * b^T
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);  // c += a^T * b
}  // namespace serial

namespace omp {
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);
}  // namespace omp

// Dispatch: OpenMP variant when compiled in and the problem is large enough.
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);

}  // namespace galgraph::kernels
