#include "kernel_learner.hpp"

#include <cmath>
#include <fstream>

#include "autodiff.hpp"
#include "fd_solver.hpp"

namespace heatflow {

using ad::Tensor;

const char* constraint_name(StencilConstraint constraint) {
  switch (constraint) {
    case StencilConstraint::unit_norm: return "unit-norm";
    case StencilConstraint::fixed_center: return "fixed-center";
    case StencilConstraint::none: return "none";
  }
  return "unknown";
}

StencilConstraint parse_constraint(const std::string& name) {
  if (name == "unit-norm" || name == "unit_norm") {
    return StencilConstraint::unit_norm;
  }
  if (name == "fixed-center" || name == "fixed_center") {
    return StencilConstraint::fixed_center;
  }
  if (name == "none") return StencilConstraint::none;
  fail(ErrorCode::invalid_argument,
       "unknown constraint '" + name + "' (unit-norm, fixed-center or none)");
}

namespace {

double frobenius(std::span<const float> w) {
  double sum = 0.0;
  for (float v : w) sum += static_cast<double>(v) * v;
  return std::sqrt(sum);
}

void project(Tensor& kernel, StencilConstraint constraint, float center_init) {
  auto w = kernel.data();
  switch (constraint) {
    case StencilConstraint::unit_norm: {
      const double norm = frobenius(w);
      if (norm == 0.0) {
        fail(ErrorCode::invalid_argument,
             "learn_kernel: kernel collapsed to zero under unit_norm");
      }
      const float inv = static_cast<float>(1.0 / norm);
      for (auto& v : w) v *= inv;
      break;
    }
    case StencilConstraint::fixed_center:
      w[4] = center_init;
      break;
    case StencilConstraint::none:
      break;
  }
}

}  // namespace

KernelLearnResult learn_kernel(const KernelLearnConfig& config) {
  if (config.grid_size < 3) {
    fail(ErrorCode::invalid_argument,
         "learn_kernel: grid_size must be >= 3, got " +
             std::to_string(config.grid_size));
  }
  if (config.steps < 1 || config.n_samples < 1) {
    fail(ErrorCode::invalid_argument,
         "learn_kernel: steps and n_samples must be >= 1");
  }
  const int g = config.grid_size;
  Rng rng(config.seed);

  std::vector<float> init(9);
  for (auto& v : init) v = static_cast<float>(rng.normal(0.0, 0.1));
  Tensor kernel = Tensor::from_data({1, 1, 3, 3}, std::move(init), true);
  const float center_init = kernel.data()[4];

  ad::Adam adam({kernel}, ad::AdamConfig{config.learning_rate});
  KernelLearnResult result;
  result.history.reserve(static_cast<size_t>(config.steps));

  for (int step = 0; step < config.steps; ++step) {
    // Fresh converged fields each step; only the solutions are used, the
    // boundary specs themselves are never shown to the kernel.
    std::vector<float> data(static_cast<size_t>(config.n_samples) * g * g);
    for (int s = 0; s < config.n_samples; ++s) {
      auto solution = ground_truth(make_problem(sample_boundary(rng, g)));
      float* dst = data.data() + static_cast<size_t>(s) * g * g;
      auto values = solution.values();
      for (int64_t i = 0; i < solution.size(); ++i) {
        dst[i] = static_cast<float>(values[static_cast<size_t>(i)] /
                                    kTemperatureRange);
      }
    }
    Tensor batch = Tensor::from_data({config.n_samples, 1, g, g},
                                     std::move(data), false);
    Tensor objective =
        ad::sum(ad::abs_value(ad::conv2d(batch, kernel, Tensor(), 1, 0)));
    const double obj = static_cast<double>(objective.scalar());
    if (!std::isfinite(obj)) {
      fail(ErrorCode::nan_detected,
           "learn_kernel: non-finite objective at step " + std::to_string(step));
    }
    ad::backward(objective);
    adam.step();
    adam.zero_grad();
    project(kernel, config.constraint, center_init);

    result.history.push_back({step, obj, frobenius(kernel.data())});
  }

  for (int i = 0; i < 9; ++i) {
    result.stencil.w[static_cast<size_t>(i)] =
        static_cast<double>(kernel.data()[static_cast<size_t>(i)]);
  }
  result.final_objective = result.history.back().objective;
  return result;
}

void write_kernel_history_csv(const std::vector<KernelStepRecord>& history,
                              const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot open for writing: " + path.string());
  out << "step,objective,frobenius_norm\n";
  for (const auto& r : history) {
    out << r.step << ',' << format_double(r.objective) << ','
        << format_double(r.frobenius_norm) << '\n';
  }
  if (!out) fail(ErrorCode::io, "write failed: " + path.string());
}

Stencil3x3 normalize_stencil(const Stencil3x3& stencil) {
  const double norm = stencil.frobenius_norm();
  if (norm == 0.0) {
    fail(ErrorCode::invalid_argument,
         "normalize_stencil: zero stencil has no direction");
  }
  double sign = stencil.center() < 0.0 ? -1.0 : 1.0;
  Stencil3x3 out;
  for (size_t i = 0; i < 9; ++i) out.w[i] = stencil.w[i] * sign / norm;
  return out;
}

double cosine_similarity(const Stencil3x3& a, const Stencil3x3& b) {
  double dot = 0.0;
  for (size_t i = 0; i < 9; ++i) dot += a.w[i] * b.w[i];
  const double na = a.frobenius_norm(), nb = b.frobenius_norm();
  if (na == 0.0 || nb == 0.0) {
    fail(ErrorCode::invalid_argument,
         "cosine_similarity: zero stencil has no direction");
  }
  return dot / (na * nb);
}

double off_center_ratio(const Stencil3x3& stencil) {
  if (stencil.center() == 0.0) {
    fail(ErrorCode::invalid_argument,
         "off_center_ratio: center weight is zero");
  }
  const double edges =
      (stencil.at(0, 1) + stencil.at(1, 0) + stencil.at(1, 2) +
       stencil.at(2, 1)) /
      4.0;
  return edges / stencil.center();
}

}  // namespace heatflow
