#pragma once

namespace hsjp::linalg {

// Row-major C[m x n] = alpha * op(A) * op(B) + beta * C.
// op(A) is [m x k]; lda/ldb/ldc are leading dimensions of the stored arrays.
template <class T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
          const T* b, int ldb, T beta, T* c, int ldc);

// The BLAS backend is pinned to one thread; parallelism lives at the batch
// level where reduction order is controlled.
void init_blas_single_thread();

}  // namespace hsjp::linalg
