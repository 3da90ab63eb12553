#include "gemm.hpp"

#include <Eigen/Core>

#include "parallel.hpp"

namespace heatflow {
namespace {

using MatrixRM =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

constexpr int64_t kParallelFlopThreshold = 1 << 20;

template <typename AExpr, typename BExpr>
void product_into(const AExpr& a, const BExpr& b, MapRM c, bool accumulate) {
  if (accumulate) {
    c.noalias() += a * b;
  } else {
    c.noalias() = a * b;
  }
}

template <typename AExpr, typename BExpr>
void run(const AExpr& a, const BExpr& b, float* c_ptr, int64_t m, int64_t k,
         int64_t n, bool accumulate) {
  MapRM c(c_ptr, m, n);
  if (m * k * n < kParallelFlopThreshold || thread_count() == 1) {
    product_into(a, b, c, accumulate);
    return;
  }
  if (m >= n) {
    parallel_for(0, m, [&](int64_t r0, int64_t r1) {
      MapRM c_rows(c_ptr + r0 * n, r1 - r0, n);
      product_into(a.middleRows(r0, r1 - r0), b, c_rows, accumulate);
    });
  } else {
    parallel_for(0, n, [&](int64_t c0, int64_t c1) {
      // Column block of a row-major C is a strided map.
      Eigen::Map<MatrixRM, 0, Eigen::OuterStride<>> c_cols(
          c_ptr + c0, m, c1 - c0, Eigen::OuterStride<>(n));
      if (accumulate) {
        c_cols.noalias() += a * b.middleCols(c0, c1 - c0);
      } else {
        c_cols.noalias() = a * b.middleCols(c0, c1 - c0);
      }
    });
  }
}

}  // namespace

void matmul(const float* a, bool trans_a, const float* b, bool trans_b,
            float* c, int64_t m, int64_t k, int64_t n, bool accumulate) {
  if (!trans_a && !trans_b) {
    run(ConstMapRM(a, m, k), ConstMapRM(b, k, n), c, m, k, n, accumulate);
  } else if (trans_a && !trans_b) {
    run(ConstMapRM(a, k, m).transpose(), ConstMapRM(b, k, n), c, m, k, n,
        accumulate);
  } else if (!trans_a && trans_b) {
    run(ConstMapRM(a, m, k), ConstMapRM(b, n, k).transpose(), c, m, k, n,
        accumulate);
  } else {
    run(ConstMapRM(a, k, m).transpose(), ConstMapRM(b, n, k).transpose(), c, m,
        k, n, accumulate);
  }
}

}  // namespace heatflow
