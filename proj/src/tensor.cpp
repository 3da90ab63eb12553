#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

#include "autodiff.hpp"

namespace heatflow::ad {

int64_t numel(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

namespace detail {

namespace {
std::atomic<uint64_t> g_next_id{1};
}

std::shared_ptr<Node> make_node(Shape shape,
                                std::vector<std::shared_ptr<Node>> inputs) {
  for (int d : shape) {
    if (d < 1) {
      fail(ErrorCode::invalid_argument,
           "tensor shape must be positive, got " + shape_str(shape));
    }
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value.assign(static_cast<size_t>(numel(node->shape)), 0.0f);
  node->inputs = std::move(inputs);
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  for (const auto& in : node->inputs) {
    if (in && in->requires_grad) node->requires_grad = true;
  }
  return node;
}

}  // namespace detail

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto node = detail::make_node(std::move(shape), {});
  node->requires_grad = requires_grad;
  return wrap(std::move(node));
}

Tensor Tensor::constant(Shape shape, float value) {
  auto t = zeros(std::move(shape), false);
  std::fill(t.data().begin(), t.data().end(), value);
  return t;
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data,
                         bool requires_grad) {
  auto node = detail::make_node(std::move(shape), {});
  if (data.size() != node->value.size()) {
    fail(ErrorCode::invalid_argument,
         "from_data: got " + std::to_string(data.size()) + " values for shape " +
             shape_str(node->shape));
  }
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return wrap(std::move(node));
}

float Tensor::scalar() const {
  if (!defined() || size() != 1) {
    fail(ErrorCode::invalid_argument, "scalar() requires a 1-element tensor");
  }
  return node_->value[0];
}

namespace {

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) {
    fail(ErrorCode::invalid_argument, std::string(op) + ": undefined tensor");
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    fail(ErrorCode::dimension_mismatch,
         std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
             shape_str(b.shape()));
  }
}

using detail::Node;

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_defined(a, "add");
  require_defined(b, "add");
  require_same_shape(a, b, "add");
  auto node = detail::make_node(a.shape(), {a.node_ptr(), b.node_ptr()});
  const auto& av = a.data();
  const auto& bv = b.data();
  for (size_t i = 0; i < node->value.size(); ++i) node->value[i] = av[i] + bv[i];
  if (node->requires_grad) {
    node->backprop = [](Node& self) {
      for (int k = 0; k < 2; ++k) {
        Node& in = *self.inputs[static_cast<size_t>(k)];
        if (!in.requires_grad) continue;
        in.ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += self.grad[i];
      }
    };
  }
  return Tensor::wrap(node);
}

Tensor multiply(const Tensor& a, const Tensor& b) {
  require_defined(a, "multiply");
  require_defined(b, "multiply");
  require_same_shape(a, b, "multiply");
  auto node = detail::make_node(a.shape(), {a.node_ptr(), b.node_ptr()});
  const auto& av = a.data();
  const auto& bv = b.data();
  for (size_t i = 0; i < node->value.size(); ++i) node->value[i] = av[i] * bv[i];
  if (node->requires_grad) {
    node->backprop = [](Node& self) {
      Node& a_in = *self.inputs[0];
      Node& b_in = *self.inputs[1];
      if (a_in.requires_grad) {
        a_in.ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
          a_in.grad[i] += self.grad[i] * b_in.value[i];
        }
      }
      if (b_in.requires_grad) {
        b_in.ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
          b_in.grad[i] += self.grad[i] * a_in.value[i];
        }
      }
    };
  }
  return Tensor::wrap(node);
}

Tensor scale(const Tensor& a, float factor) {
  require_defined(a, "scale");
  auto node = detail::make_node(a.shape(), {a.node_ptr()});
  const auto& av = a.data();
  for (size_t i = 0; i < node->value.size(); ++i) node->value[i] = factor * av[i];
  if (node->requires_grad) {
    node->backprop = [factor](Node& self) {
      Node& in = *self.inputs[0];
      in.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) {
        in.grad[i] += factor * self.grad[i];
      }
    };
  }
  return Tensor::wrap(node);
}

Tensor square(const Tensor& a) {
  require_defined(a, "square");
  auto node = detail::make_node(a.shape(), {a.node_ptr()});
  const auto& av = a.data();
  for (size_t i = 0; i < node->value.size(); ++i) node->value[i] = av[i] * av[i];
  if (node->requires_grad) {
    node->backprop = [](Node& self) {
      Node& in = *self.inputs[0];
      in.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) {
        in.grad[i] += 2.0f * in.value[i] * self.grad[i];
      }
    };
  }
  return Tensor::wrap(node);
}

Tensor abs_value(const Tensor& a) {
  require_defined(a, "abs_value");
  auto node = detail::make_node(a.shape(), {a.node_ptr()});
  const auto& av = a.data();
  for (size_t i = 0; i < node->value.size(); ++i) node->value[i] = std::abs(av[i]);
  if (node->requires_grad) {
    node->backprop = [](Node& self) {
      Node& in = *self.inputs[0];
      in.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) {
        float x = in.value[i];
        float s = (x > 0.0f) ? 1.0f : (x < 0.0f ? -1.0f : 0.0f);
        in.grad[i] += s * self.grad[i];
      }
    };
  }
  return Tensor::wrap(node);
}

Tensor leaky_relu(const Tensor& a, float negative_slope) {
  require_defined(a, "leaky_relu");
  auto node = detail::make_node(a.shape(), {a.node_ptr()});
  const auto& av = a.data();
  for (size_t i = 0; i < node->value.size(); ++i) {
    float x = av[i];
    node->value[i] = x > 0.0f ? x : negative_slope * x;
  }
  if (node->requires_grad) {
    node->backprop = [negative_slope](Node& self) {
      Node& in = *self.inputs[0];
      in.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) {
        float g = in.value[i] > 0.0f ? 1.0f : negative_slope;
        in.grad[i] += g * self.grad[i];
      }
    };
  }
  return Tensor::wrap(node);
}

Tensor sigmoid(const Tensor& a) {
  require_defined(a, "sigmoid");
  auto node = detail::make_node(a.shape(), {a.node_ptr()});
  const auto& av = a.data();
  for (size_t i = 0; i < node->value.size(); ++i) {
    node->value[i] = 1.0f / (1.0f + std::exp(-av[i]));
  }
  if (node->requires_grad) {
    node->backprop = [](Node& self) {
      Node& in = *self.inputs[0];
      in.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) {
        float y = self.value[i];
        in.grad[i] += y * (1.0f - y) * self.grad[i];
      }
    };
  }
  return Tensor::wrap(node);
}

Tensor sum(const Tensor& a) {
  require_defined(a, "sum");
  auto node = detail::make_node({1}, {a.node_ptr()});
  double acc = 0.0;
  for (float v : a.data()) acc += static_cast<double>(v);
  node->value[0] = static_cast<float>(acc);
  if (node->requires_grad) {
    node->backprop = [](Node& self) {
      Node& in = *self.inputs[0];
      in.ensure_grad();
      float g = self.grad[0];
      for (size_t i = 0; i < in.grad.size(); ++i) in.grad[i] += g;
    };
  }
  return Tensor::wrap(node);
}

Tensor mean(const Tensor& a) {
  require_defined(a, "mean");
  auto node = detail::make_node({1}, {a.node_ptr()});
  double acc = 0.0;
  for (float v : a.data()) acc += static_cast<double>(v);
  const double inv_n = 1.0 / static_cast<double>(a.size());
  node->value[0] = static_cast<float>(acc * inv_n);
  if (node->requires_grad) {
    node->backprop = [inv_n](Node& self) {
      Node& in = *self.inputs[0];
      in.ensure_grad();
      float g = self.grad[0] * static_cast<float>(inv_n);
      for (size_t i = 0; i < in.grad.size(); ++i) in.grad[i] += g;
    };
  }
  return Tensor::wrap(node);
}

namespace {

void require_4d(const Tensor& t, const char* op) {
  if (t.shape().size() != 4) {
    fail(ErrorCode::dimension_mismatch,
         std::string(op) + ": expected a 4-D tensor, got " +
             shape_str(t.shape()));
  }
}

}  // namespace

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_defined(a, "concat");
  require_defined(b, "concat");
  require_4d(a, "concat");
  require_4d(b, "concat");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    fail(ErrorCode::dimension_mismatch,
         "concat: incompatible shapes " + shape_str(a.shape()) + " vs " +
             shape_str(b.shape()));
  }
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  const int hw = a.dim(2) * a.dim(3);
  auto node = detail::make_node({n, ca + cb, a.dim(2), a.dim(3)},
                                {a.node_ptr(), b.node_ptr()});
  const size_t a_block = static_cast<size_t>(ca) * hw;
  const size_t b_block = static_cast<size_t>(cb) * hw;
  for (int s = 0; s < n; ++s) {
    std::copy_n(a.data().data() + s * a_block, a_block,
                node->value.data() + s * (a_block + b_block));
    std::copy_n(b.data().data() + s * b_block, b_block,
                node->value.data() + s * (a_block + b_block) + a_block);
  }
  if (node->requires_grad) {
    node->backprop = [n, a_block, b_block](Node& self) {
      Node& a_in = *self.inputs[0];
      Node& b_in = *self.inputs[1];
      if (a_in.requires_grad) a_in.ensure_grad();
      if (b_in.requires_grad) b_in.ensure_grad();
      for (int s = 0; s < n; ++s) {
        const float* g = self.grad.data() + s * (a_block + b_block);
        if (a_in.requires_grad) {
          float* ga = a_in.grad.data() + s * a_block;
          for (size_t i = 0; i < a_block; ++i) ga[i] += g[i];
        }
        if (b_in.requires_grad) {
          float* gb = b_in.grad.data() + s * b_block;
          for (size_t i = 0; i < b_block; ++i) gb[i] += g[i + a_block];
        }
      }
    };
  }
  return Tensor::wrap(node);
}

Tensor slice_strided(const Tensor& a, int row_start, int row_step,
                     int col_start, int col_step) {
  require_defined(a, "slice");
  require_4d(a, "slice");
  const int h = a.dim(2), w = a.dim(3);
  if (row_start < 0 || row_start >= h || col_start < 0 || col_start >= w ||
      row_step < 1 || col_step < 1) {
    fail(ErrorCode::invalid_argument,
         "slice: invalid start/step for shape " + shape_str(a.shape()));
  }
  const int oh = (h - row_start + row_step - 1) / row_step;
  const int ow = (w - col_start + col_step - 1) / col_step;
  const int n = a.dim(0), c = a.dim(1);
  auto node = detail::make_node({n, c, oh, ow}, {a.node_ptr()});
  for (int s = 0; s < n * c; ++s) {
    const float* src = a.data().data() + static_cast<size_t>(s) * h * w;
    float* dst = node->value.data() + static_cast<size_t>(s) * oh * ow;
    for (int i = 0; i < oh; ++i) {
      const float* row = src + static_cast<size_t>(row_start + i * row_step) * w;
      for (int j = 0; j < ow; ++j) {
        dst[static_cast<size_t>(i) * ow + j] = row[col_start + j * col_step];
      }
    }
  }
  if (node->requires_grad) {
    const int nc = n * c;
    node->backprop = [nc, h, w, oh, ow, row_start, row_step, col_start,
                      col_step](Node& self) {
      Node& in = *self.inputs[0];
      in.ensure_grad();
      for (int s = 0; s < nc; ++s) {
        float* dst = in.grad.data() + static_cast<size_t>(s) * h * w;
        const float* g = self.grad.data() + static_cast<size_t>(s) * oh * ow;
        for (int i = 0; i < oh; ++i) {
          float* row = dst + static_cast<size_t>(row_start + i * row_step) * w;
          for (int j = 0; j < ow; ++j) {
            row[col_start + j * col_step] += g[static_cast<size_t>(i) * ow + j];
          }
        }
      }
    };
  }
  return Tensor::wrap(node);
}

Tensor impose_border(const Tensor& prediction, const Tensor& reference) {
  require_defined(prediction, "impose_border");
  require_defined(reference, "impose_border");
  require_4d(prediction, "impose_border");
  require_same_shape(prediction, reference, "impose_border");
  const int n = prediction.dim(0), c = prediction.dim(1);
  const int h = prediction.dim(2), w = prediction.dim(3);
  if (h < 2 || w < 2) {
    fail(ErrorCode::invalid_argument,
         "impose_border: spatial size must be at least 2x2");
  }
  auto node = detail::make_node(
      prediction.shape(), {prediction.node_ptr(), reference.node_ptr()});
  node->value.assign(prediction.data().begin(), prediction.data().end());
  const auto& ref = reference.data();
  for (int s = 0; s < n * c; ++s) {
    const size_t base = static_cast<size_t>(s) * h * w;
    for (int j = 0; j < w; ++j) {
      node->value[base + j] = ref[base + j];
      node->value[base + static_cast<size_t>(h - 1) * w + j] =
          ref[base + static_cast<size_t>(h - 1) * w + j];
    }
    for (int i = 0; i < h; ++i) {
      node->value[base + static_cast<size_t>(i) * w] =
          ref[base + static_cast<size_t>(i) * w];
      node->value[base + static_cast<size_t>(i) * w + w - 1] =
          ref[base + static_cast<size_t>(i) * w + w - 1];
    }
  }
  if (node->requires_grad) {
    const int nc = n * c;
    node->backprop = [nc, h, w](Node& self) {
      Node& pred = *self.inputs[0];
      Node& ref_in = *self.inputs[1];
      if (pred.requires_grad) {
        pred.ensure_grad();
        for (int s = 0; s < nc; ++s) {
          const size_t base = static_cast<size_t>(s) * h * w;
          for (int i = 1; i < h - 1; ++i) {
            for (int j = 1; j < w - 1; ++j) {
              pred.grad[base + static_cast<size_t>(i) * w + j] +=
                  self.grad[base + static_cast<size_t>(i) * w + j];
            }
          }
        }
      }
      if (ref_in.requires_grad) {
        ref_in.ensure_grad();
        for (int s = 0; s < nc; ++s) {
          const size_t base = static_cast<size_t>(s) * h * w;
          for (int j = 0; j < w; ++j) {
            ref_in.grad[base + j] += self.grad[base + j];
            ref_in.grad[base + static_cast<size_t>(h - 1) * w + j] +=
                self.grad[base + static_cast<size_t>(h - 1) * w + j];
          }
          for (int i = 1; i < h - 1; ++i) {
            ref_in.grad[base + static_cast<size_t>(i) * w] +=
                self.grad[base + static_cast<size_t>(i) * w];
            ref_in.grad[base + static_cast<size_t>(i) * w + w - 1] +=
                self.grad[base + static_cast<size_t>(i) * w + w - 1];
          }
        }
      }
    };
  }
  return Tensor::wrap(node);
}

void backward(const Tensor& loss) {
  require_defined(loss, "backward");
  if (loss.size() != 1) {
    fail(ErrorCode::invalid_argument,
         "backward: loss must be a scalar, got shape " +
             shape_str(loss.shape()));
  }
  // Collect reachable nodes, then process in descending construction order
  // (a valid topological order since inputs precede outputs).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{loss.node()};
  seen.insert(loss.node());
  while (!stack.empty()) {
    Node* node = stack.back();
    stack.pop_back();
    order.push_back(node);
    for (const auto& in : node->inputs) {
      if (in && seen.insert(in.get()).second) stack.push_back(in.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const Node* a, const Node* b) { return a->id > b->id; });

  // Interior (computed) gradients are scratch per pass; leaves accumulate.
  for (Node* node : order) {
    if (node->backprop && node->requires_grad) {
      node->grad.assign(node->value.size(), 0.0f);
    }
  }
  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0f;

  for (Node* node : order) {
    if (node->backprop && node->requires_grad && !node->grad.empty()) {
      node->backprop(*node);
    }
  }
}

Adam::Adam(std::vector<Tensor> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  if (!(config_.learning_rate > 0.0f) || config_.beta1 <= 0.0f ||
      config_.beta1 >= 1.0f || config_.beta2 <= 0.0f || config_.beta2 >= 1.0f ||
      !(config_.epsilon > 0.0f)) {
    fail(ErrorCode::invalid_argument, "Adam: invalid hyperparameters");
  }
  first_moment_.reserve(params_.size());
  second_moment_.reserve(params_.size());
  for (const auto& p : params_) {
    if (!p.defined() || !p.requires_grad()) {
      fail(ErrorCode::invalid_argument,
           "Adam: parameters must be defined tensors with requires_grad");
    }
    first_moment_.emplace_back(p.size(), 0.0f);
    second_moment_.emplace_back(p.size(), 0.0f);
  }
}

void Adam::step() {
  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const float bc1 =
      static_cast<float>(1.0 - std::pow(static_cast<double>(config_.beta1), t));
  const float bc2 =
      static_cast<float>(1.0 - std::pow(static_cast<double>(config_.beta2), t));
  for (size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    auto values = p.data();
    auto& m = first_moment_[k];
    auto& v = second_moment_[k];
    const bool has_grad = p.has_grad();
    const auto g = has_grad ? p.grad() : std::span<const float>{};
    for (size_t i = 0; i < values.size(); ++i) {
      const float gi = has_grad ? g[i] : 0.0f;
      m[i] = config_.beta1 * m[i] + (1.0f - config_.beta1) * gi;
      v[i] = config_.beta2 * v[i] + (1.0f - config_.beta2) * gi * gi;
      const float m_hat = m[i] / bc1;
      const float v_hat = v[i] / bc2;
      values[i] -= config_.learning_rate * m_hat /
                   (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace heatflow::ad
