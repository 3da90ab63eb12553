#pragma once

#include <cstdint>

namespace heatflow {

/// Row-major single-precision GEMM: C = op(A) * op(B), optionally accumulated
/// into C. Logical dimensions after transposition: op(A) is m x k, op(B) is
/// k x n, C is m x n. Physical layouts: A is (k x m) when trans_a else
/// (m x k); B is (n x k) when trans_b else (k x n).
/// Large products are split across worker threads by output rows/columns;
/// the split depends only on sizes and the configured thread count.
void matmul(const float* a, bool trans_a, const float* b, bool trans_b,
            float* c, int64_t m, int64_t k, int64_t n, bool accumulate);

}  // namespace heatflow
