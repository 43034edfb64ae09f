#pragma once

// Thin portability layer over OpenMP. Every kernel that has a parallel
// variant also keeps a serial reference next to it (see kernels.hpp).

#if defined(_OPENMP)
#include <omp.h>
#define GALGRAPH_PRAGMA(x) _Pragma(#x)
#define GALGRAPH_PARALLEL_FOR GALGRAPH_PRAGMA(omp parallel for schedule(static))
#define GALGRAPH_PARALLEL_FOR_DYNAMIC GALGRAPH_PRAGMA(omp parallel for schedule(dynamic))
#else
#define GALGRAPH_PARALLEL_FOR
#define GALGRAPH_PARALLEL_FOR_DYNAMIC
#endif

namespace galgraph {

inline int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline int thread_id() {
#if defined(_OPENMP)
  return omp_get_thread_num();
#else
  return 0;
#endif
}

inline void set_threads(int n) {
#if defined(_OPENMP)
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline bool openmp_enabled() {
#if defined(_OPENMP)
  return true;
#else
  return false;
#endif
}

}  // namespace galgraph
