#include <algorithm>
#include <cstring>
#include <vector>

#include "autodiff.hpp"
#include "gemm.hpp"

namespace heatflow::ad {
namespace {

using detail::Node;

struct ConvGeom {
  int n, in_c, in_h, in_w;
  int out_c, k, stride, pad;
  int out_h, out_w;
  bool has_bias;
};

// Scratch buffers reused across calls on the same thread. Graph construction
// and backward are single-threaded per graph, and each call fully consumes
// what it writes.
std::vector<float>& scratch_a() {
  thread_local std::vector<float> buf;
  return buf;
}
std::vector<float>& scratch_b() {
  thread_local std::vector<float> buf;
  return buf;
}

// src (C,H,W) -> cols (C*K*K, out_h*out_w) for a kernel applied with the
// given stride/pad. Out-of-bounds taps are zero.
void im2col(const float* src, int c_count, int h, int w, int k, int stride,
            int pad, int out_h, int out_w, float* cols) {
  const int64_t out_hw = static_cast<int64_t>(out_h) * out_w;
  for (int c = 0; c < c_count; ++c) {
    const float* plane = src + static_cast<int64_t>(c) * h * w;
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        float* row =
            cols + (static_cast<int64_t>(c) * k * k + kh * k + kw) * out_hw;
        for (int oh = 0; oh < out_h; ++oh) {
          const int ih = oh * stride - pad + kh;
          float* out = row + static_cast<int64_t>(oh) * out_w;
          if (ih < 0 || ih >= h) {
            std::fill_n(out, out_w, 0.0f);
            continue;
          }
          const float* in_row = plane + static_cast<int64_t>(ih) * w;
          if (stride == 1) {
            const int iw0 = -pad + kw;
            for (int ow = 0; ow < out_w; ++ow) {
              const int iw = iw0 + ow;
              out[ow] = (iw >= 0 && iw < w) ? in_row[iw] : 0.0f;
            }
          } else {
            for (int ow = 0; ow < out_w; ++ow) {
              const int iw = ow * stride - pad + kw;
              out[ow] = (iw >= 0 && iw < w) ? in_row[iw] : 0.0f;
            }
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds cols back into the (C,H,W) image.
void col2im(const float* cols, int c_count, int h, int w, int k, int stride,
            int pad, int out_h, int out_w, float* img) {
  const int64_t out_hw = static_cast<int64_t>(out_h) * out_w;
  for (int c = 0; c < c_count; ++c) {
    float* plane = img + static_cast<int64_t>(c) * h * w;
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        const float* row =
            cols + (static_cast<int64_t>(c) * k * k + kh * k + kw) * out_hw;
        for (int oh = 0; oh < out_h; ++oh) {
          const int ih = oh * stride - pad + kh;
          if (ih < 0 || ih >= h) continue;
          float* img_row = plane + static_cast<int64_t>(ih) * w;
          const float* src = row + static_cast<int64_t>(oh) * out_w;
          for (int ow = 0; ow < out_w; ++ow) {
            const int iw = ow * stride - pad + kw;
            if (iw >= 0 && iw < w) img_row[iw] += src[ow];
          }
        }
      }
    }
  }
}

ConvGeom check_conv_args(const char* op, const Tensor& input,
                         const Tensor& weight, const Tensor& bias, int stride,
                         int padding, bool transposed) {
  if (!input.defined() || !weight.defined()) {
    fail(ErrorCode::invalid_argument, std::string(op) + ": undefined tensor");
  }
  if (input.shape().size() != 4 || weight.shape().size() != 4) {
    fail(ErrorCode::dimension_mismatch,
         std::string(op) + ": expected 4-D input and weight, got " +
             shape_str(input.shape()) + " and " + shape_str(weight.shape()));
  }
  if (stride < 1 || padding < 0) {
    fail(ErrorCode::invalid_argument,
         std::string(op) + ": stride must be >= 1 and padding >= 0");
  }
  if (weight.dim(2) != weight.dim(3)) {
    fail(ErrorCode::dimension_mismatch,
         std::string(op) + ": only square kernels are supported, got " +
             shape_str(weight.shape()));
  }
  ConvGeom g{};
  g.n = input.dim(0);
  g.in_c = input.dim(1);
  g.in_h = input.dim(2);
  g.in_w = input.dim(3);
  g.k = weight.dim(2);
  g.stride = stride;
  g.pad = padding;
  // conv weight: (out_c, in_c, k, k); transposed weight: (in_c, out_c, k, k)
  const int w_in = transposed ? weight.dim(0) : weight.dim(1);
  g.out_c = transposed ? weight.dim(1) : weight.dim(0);
  if (w_in != g.in_c) {
    fail(ErrorCode::dimension_mismatch,
         std::string(op) + ": input channels " + shape_str(input.shape()) +
             " do not match weight " + shape_str(weight.shape()));
  }
  if (transposed) {
    g.out_h = (g.in_h - 1) * stride - 2 * padding + g.k;
    g.out_w = (g.in_w - 1) * stride - 2 * padding + g.k;
  } else {
    g.out_h = (g.in_h + 2 * padding - g.k) / stride + 1;
    g.out_w = (g.in_w + 2 * padding - g.k) / stride + 1;
    if (g.in_h + 2 * padding < g.k || g.in_w + 2 * padding < g.k) {
      g.out_h = 0;
    }
  }
  if (g.out_h < 1 || g.out_w < 1) {
    fail(ErrorCode::dimension_mismatch,
         std::string(op) + ": empty output for input " +
             shape_str(input.shape()) + ", weight " +
             shape_str(weight.shape()) + ", stride " + std::to_string(stride) +
             ", padding " + std::to_string(padding));
  }
  g.has_bias = bias.defined();
  if (g.has_bias &&
      (bias.shape().size() != 1 || bias.dim(0) != g.out_c)) {
    fail(ErrorCode::dimension_mismatch,
         std::string(op) + ": bias shape " + shape_str(bias.shape()) +
             " does not match " + std::to_string(g.out_c) + " output channels");
  }
  return g;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int padding) {
  const ConvGeom g =
      check_conv_args("conv2d", input, weight, bias, stride, padding, false);
  std::vector<std::shared_ptr<Node>> inputs{input.node_ptr(),
                                            weight.node_ptr()};
  if (g.has_bias) inputs.push_back(bias.node_ptr());
  auto node = detail::make_node({g.n, g.out_c, g.out_h, g.out_w},
                                std::move(inputs));

  const int64_t ickk = static_cast<int64_t>(g.in_c) * g.k * g.k;
  const int64_t out_hw = static_cast<int64_t>(g.out_h) * g.out_w;
  const int64_t in_chw = static_cast<int64_t>(g.in_c) * g.in_h * g.in_w;
  const int64_t out_chw = static_cast<int64_t>(g.out_c) * out_hw;

  auto& cols = scratch_a();
  cols.resize(static_cast<size_t>(ickk * out_hw));
  const float* x = input.data().data();
  const float* w = weight.data().data();
  for (int s = 0; s < g.n; ++s) {
    im2col(x + s * in_chw, g.in_c, g.in_h, g.in_w, g.k, g.stride, g.pad,
           g.out_h, g.out_w, cols.data());
    matmul(w, false, cols.data(), false, node->value.data() + s * out_chw,
           g.out_c, ickk, out_hw, false);
    if (g.has_bias) {
      const float* b = bias.data().data();
      for (int oc = 0; oc < g.out_c; ++oc) {
        float* row = node->value.data() + s * out_chw + oc * out_hw;
        for (int64_t i = 0; i < out_hw; ++i) row[i] += b[oc];
      }
    }
  }

  if (node->requires_grad) {
    node->backprop = [g, ickk, out_hw, in_chw, out_chw](Node& self) {
      Node& in = *self.inputs[0];
      Node& wt = *self.inputs[1];
      Node* bs = g.has_bias ? self.inputs[2].get() : nullptr;
      if (in.requires_grad) in.ensure_grad();
      if (wt.requires_grad) wt.ensure_grad();
      if (bs && bs->requires_grad) bs->ensure_grad();

      auto& cols = scratch_a();
      auto& dcols = scratch_b();
      for (int s = 0; s < g.n; ++s) {
        const float* dy = self.grad.data() + s * out_chw;
        if (bs && bs->requires_grad) {
          for (int oc = 0; oc < g.out_c; ++oc) {
            double acc = 0.0;
            const float* row = dy + oc * out_hw;
            for (int64_t i = 0; i < out_hw; ++i) acc += row[i];
            bs->grad[static_cast<size_t>(oc)] += static_cast<float>(acc);
          }
        }
        if (wt.requires_grad) {
          cols.resize(static_cast<size_t>(ickk * out_hw));
          im2col(in.value.data() + s * in_chw, g.in_c, g.in_h, g.in_w, g.k,
                 g.stride, g.pad, g.out_h, g.out_w, cols.data());
          // dW += dY * cols^T
          matmul(dy, false, cols.data(), true, wt.grad.data(), g.out_c, out_hw,
                 ickk, true);
        }
        if (in.requires_grad) {
          dcols.resize(static_cast<size_t>(ickk * out_hw));
          // dcols = W^T * dY
          matmul(wt.value.data(), true, dy, false, dcols.data(), ickk, g.out_c,
                 out_hw, false);
          col2im(dcols.data(), g.in_c, g.in_h, g.in_w, g.k, g.stride, g.pad,
                 g.out_h, g.out_w, in.grad.data() + s * in_chw);
        }
      }
    };
  }
  return Tensor::wrap(node);
}

Tensor conv2d_transposed(const Tensor& input, const Tensor& weight,
                         const Tensor& bias, int stride, int padding) {
  const ConvGeom g = check_conv_args("conv2d_transposed", input, weight, bias,
                                     stride, padding, true);
  std::vector<std::shared_ptr<Node>> inputs{input.node_ptr(),
                                            weight.node_ptr()};
  if (g.has_bias) inputs.push_back(bias.node_ptr());
  auto node = detail::make_node({g.n, g.out_c, g.out_h, g.out_w},
                                std::move(inputs));

  // The output plays the role of a conv2d input whose K/stride/pad conv maps
  // it back onto this op's input size; col2im and im2col below use that
  // geometry (conv output spatial size = in_h x in_w).
  const int64_t ockk = static_cast<int64_t>(g.out_c) * g.k * g.k;
  const int64_t in_hw = static_cast<int64_t>(g.in_h) * g.in_w;
  const int64_t in_chw = static_cast<int64_t>(g.in_c) * in_hw;
  const int64_t out_chw = static_cast<int64_t>(g.out_c) * g.out_h * g.out_w;

  auto& cols = scratch_a();
  cols.resize(static_cast<size_t>(ockk * in_hw));
  const float* x = input.data().data();
  const float* w = weight.data().data();
  for (int s = 0; s < g.n; ++s) {
    // cols = W^T (OC*K*K x IC) * X (IC x HW)
    matmul(w, true, x + s * in_chw, false, cols.data(), ockk, g.in_c, in_hw,
           false);
    float* y = node->value.data() + s * out_chw;
    std::fill_n(y, out_chw, 0.0f);
    col2im(cols.data(), g.out_c, g.out_h, g.out_w, g.k, g.stride, g.pad,
           g.in_h, g.in_w, y);
    if (g.has_bias) {
      const float* b = bias.data().data();
      for (int oc = 0; oc < g.out_c; ++oc) {
        float* row = y + static_cast<int64_t>(oc) * g.out_h * g.out_w;
        for (int64_t i = 0; i < static_cast<int64_t>(g.out_h) * g.out_w; ++i) {
          row[i] += b[oc];
        }
      }
    }
  }

  if (node->requires_grad) {
    node->backprop = [g, ockk, in_hw, in_chw, out_chw](Node& self) {
      Node& in = *self.inputs[0];
      Node& wt = *self.inputs[1];
      Node* bs = g.has_bias ? self.inputs[2].get() : nullptr;
      if (in.requires_grad) in.ensure_grad();
      if (wt.requires_grad) wt.ensure_grad();
      if (bs && bs->requires_grad) bs->ensure_grad();

      auto& dy_cols = scratch_a();
      const int64_t out_hw = static_cast<int64_t>(g.out_h) * g.out_w;
      for (int s = 0; s < g.n; ++s) {
        const float* dy = self.grad.data() + s * out_chw;
        if (bs && bs->requires_grad) {
          for (int oc = 0; oc < g.out_c; ++oc) {
            double acc = 0.0;
            const float* row = dy + oc * out_hw;
            for (int64_t i = 0; i < out_hw; ++i) acc += row[i];
            bs->grad[static_cast<size_t>(oc)] += static_cast<float>(acc);
          }
        }
        if (in.requires_grad || wt.requires_grad) {
          dy_cols.resize(static_cast<size_t>(ockk * in_hw));
          im2col(dy, g.out_c, g.out_h, g.out_w, g.k, g.stride, g.pad, g.in_h,
                 g.in_w, dy_cols.data());
          if (in.requires_grad) {
            // dX = W (IC x OC*K*K) * im2col(dY)
            matmul(wt.value.data(), false, dy_cols.data(), false,
                   in.grad.data() + s * in_chw, g.in_c, ockk, in_hw, true);
          }
          if (wt.requires_grad) {
            // dW += X * im2col(dY)^T
            matmul(in.value.data() + s * in_chw, false, dy_cols.data(), true,
                   wt.grad.data(), g.in_c, in_hw, ockk, true);
          }
        }
      }
    };
  }
  return Tensor::wrap(node);
}

}  // namespace heatflow::ad
