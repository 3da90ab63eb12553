#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace heatflow::ad {

using Shape = std::vector<int>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;  // empty until first touched by backward
  bool requires_grad = false;
  uint64_t id = 0;  // construction order; inputs always have smaller ids
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backprop;  // reads grad, accumulates into inputs

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0f);
  }
};

std::shared_ptr<Node> make_node(Shape shape,
                                std::vector<std::shared_ptr<Node>> inputs);

}  // namespace detail

/// Handle to a node of a reverse-mode differentiation graph over dense
/// single-precision tensors (NCHW layout for 4-D). Graphs are built by the
/// free functions below; backward() walks the graph once in reverse
/// construction order. A graph instance is single-threaded.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor constant(Shape shape, float value);
  static Tensor from_data(Shape shape, std::vector<float> data,
                          bool requires_grad = false);
  static Tensor wrap(std::shared_ptr<detail::Node> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int64_t size() const { return static_cast<int64_t>(node_->value.size()); }

  std::span<float> data() { return node_->value; }
  std::span<const float> data() const { return node_->value; }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<float> grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  std::span<const float> grad() const {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() {
    if (!node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0f);
  }

  /// Value of a single-element tensor.
  float scalar() const;

  detail::Node* node() const { return node_.get(); }
  std::shared_ptr<detail::Node> node_ptr() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Elementwise ops (same-shape operands).
Tensor add(const Tensor& a, const Tensor& b);
Tensor multiply(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float factor);
Tensor square(const Tensor& a);
Tensor abs_value(const Tensor& a);
Tensor leaky_relu(const Tensor& a, float negative_slope);
Tensor sigmoid(const Tensor& a);

// Reductions to a single-element tensor; accumulation in double.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

/// Concatenates two 4-D tensors along the channel axis.
Tensor concat_channels(const Tensor& a, const Tensor& b);

/// Strided spatial subsample of a 4-D tensor: keeps rows row_start,
/// row_start+row_step, ... and likewise for columns.
Tensor slice_strided(const Tensor& a, int row_start, int row_step,
                     int col_start, int col_step);

/// input (N,IC,H,W), weight (OC,IC,K,K), optional bias (OC).
/// Output spatial size = floor((in + 2*padding - K)/stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int padding);

/// input (N,IC,H,W), weight (IC,OC,K,K), optional bias (OC).
/// Output spatial size = (in - 1)*stride - 2*padding + K. Adjoint of conv2d
/// with the same weight storage and geometry.
Tensor conv2d_transposed(const Tensor& input, const Tensor& weight,
                         const Tensor& bias, int stride, int padding);

/// Copies prediction with its one-pixel border ring replaced by reference's.
/// Gradient flows to prediction on the interior only.
Tensor impose_border(const Tensor& prediction, const Tensor& reference);

/// Populates grad on every requires_grad node reachable from loss; leaf
/// gradients accumulate across calls (callers zero between steps).
void backward(const Tensor& loss);

struct AdamConfig {
  float learning_rate = 2e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

/// Adam with bias correction over a fixed parameter list.
class Adam {
 public:
  explicit Adam(std::vector<Tensor> params, AdamConfig config = {});
  void step();
  void zero_grad();
  int64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return config_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<float>> first_moment_, second_moment_;
  AdamConfig config_;
  int64_t step_count_ = 0;
};

}  // namespace heatflow::ad
