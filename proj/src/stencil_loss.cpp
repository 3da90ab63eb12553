#include "stencil_loss.hpp"

#include <algorithm>
#include <cmath>

namespace heatflow {

double Stencil3x3::frobenius_norm() const {
  double sum = 0.0;
  for (double v : w) sum += v * v;
  return std::sqrt(sum);
}

void write_stencil_csv(const Stencil3x3& stencil,
                       const std::filesystem::path& path) {
  TemperatureField grid(3, 3, std::vector<double>(stencil.w.begin(),
                                                  stencil.w.end()));
  write_field_csv(grid, path);
}

Stencil3x3 read_stencil_csv(const std::filesystem::path& path) {
  auto grid = read_field_csv(path);
  if (grid.height() != 3 || grid.width() != 3) {
    fail(ErrorCode::format, "stencil file must be 3x3: " + path.string());
  }
  Stencil3x3 s;
  std::copy(grid.values().begin(), grid.values().end(), s.w.begin());
  return s;
}

TemperatureField physics_residual(const TemperatureField& field,
                                  const Stencil3x3& stencil) {
  const int h = field.height(), w = field.width();
  if (h < 3 || w < 3) {
    fail(ErrorCode::invalid_argument,
         "physics_residual: field must be at least 3x3, got " +
             std::to_string(h) + "x" + std::to_string(w));
  }
  TemperatureField out(h - 2, w - 2);
  for (int i = 0; i < h - 2; ++i) {
    for (int j = 0; j < w - 2; ++j) {
      double acc = 0.0;
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
          acc += stencil.at(r, c) * field(i + r, j + c);
        }
      }
      out(i, j) = acc;
    }
  }
  return out;
}

double physics_loss(const TemperatureField& field, const Stencil3x3& stencil) {
  auto residual = physics_residual(field, stencil);
  double sum = 0.0;
  for (double r : residual.values()) sum += r * r;
  return sum / static_cast<double>(residual.size());
}

double physics_loss(const TemperatureField& field) {
  return physics_loss(field, Stencil3x3::canonical());
}

TemperatureField downsample_stride(const TemperatureField& field, int factor) {
  if (factor < 1) {
    fail(ErrorCode::invalid_argument,
         "downsample_stride: factor must be >= 1, got " +
             std::to_string(factor));
  }
  if (factor == 1) return field;
  const int oh = (field.height() + factor - 1) / factor;
  const int ow = (field.width() + factor - 1) / factor;
  TemperatureField out(oh, ow);
  for (int i = 0; i < oh; ++i) {
    for (int j = 0; j < ow; ++j) out(i, j) = field(i * factor, j * factor);
  }
  return out;
}

std::vector<int> pyramid_sizes(int side, int base_factor, int min_size) {
  if (side < 1 || base_factor < 2 || min_size < 1) {
    fail(ErrorCode::invalid_argument, "pyramid_sizes: invalid parameters");
  }
  std::vector<int> sizes{side};
  int s = side;
  while ((s + base_factor - 1) / base_factor >= min_size) {
    s = (s + base_factor - 1) / base_factor;
    sizes.push_back(s);
  }
  // A side above min_size must not end up with a bare single level: without
  // any coarse level the multiscale loss degenerates to the plain one and
  // training collapses to near-constant fields. Descend one more step.
  if (sizes.size() == 1 && side > min_size) {
    sizes.push_back((side + base_factor - 1) / base_factor);
  }
  return sizes;
}

int pyramid_levels(int side, int base_factor, int min_size) {
  return static_cast<int>(pyramid_sizes(side, base_factor, min_size).size());
}

std::vector<int> pyramid_strides(int side, int base_factor, int min_size) {
  auto sizes = pyramid_sizes(side, base_factor, min_size);
  return std::vector<int>(sizes.size() - 1, base_factor);
}

std::vector<TemperatureField> build_pyramid(const TemperatureField& field,
                                            int base_factor, int min_size) {
  if (field.height() != field.width()) {
    fail(ErrorCode::invalid_argument,
         "build_pyramid: field must be square, got " +
             std::to_string(field.height()) + "x" +
             std::to_string(field.width()));
  }
  auto sizes = pyramid_sizes(field.height(), base_factor, min_size);
  std::vector<TemperatureField> levels{field};
  for (size_t i = 1; i < sizes.size(); ++i) {
    levels.push_back(downsample_stride(levels.back(), base_factor));
  }
  return levels;
}

LambdaSchedule::LambdaSchedule(int levels) : levels_(levels) {
  if (levels < 1) {
    fail(ErrorCode::invalid_argument,
         "LambdaSchedule: levels must be >= 1, got " + std::to_string(levels));
  }
}

std::vector<double> LambdaSchedule::weights(double progress) const {
  double t = std::clamp(progress, 0.0, 1.0);
  std::vector<double> lambda(static_cast<size_t>(levels_), 0.0);
  if (levels_ == 1) {
    lambda[0] = 1.0;
    return lambda;
  }
  // Mass position runs from the last (coarsest) level at t=0 to level 0 at
  // t=1, advancing with t^2 so the finest-only regime starts late.
  double pos = (1.0 - t * t) * static_cast<double>(levels_ - 1);
  int lo = static_cast<int>(std::floor(pos));
  lo = std::clamp(lo, 0, levels_ - 1);
  double frac = pos - static_cast<double>(lo);
  lambda[static_cast<size_t>(lo)] = 1.0 - frac;
  if (lo + 1 < levels_) lambda[static_cast<size_t>(lo) + 1] += frac;
  return lambda;
}

double multiscale_loss(const TemperatureField& field, const Stencil3x3& stencil,
                       const LambdaSchedule& schedule, double progress) {
  auto levels = build_pyramid(field);
  if (static_cast<int>(levels.size()) != schedule.levels()) {
    fail(ErrorCode::dimension_mismatch,
         "multiscale_loss: pyramid has " + std::to_string(levels.size()) +
             " levels but schedule expects " +
             std::to_string(schedule.levels()));
  }
  auto lambda = schedule.weights(progress);
  double total = 0.0;
  for (size_t i = 0; i < levels.size(); ++i) {
    if (lambda[i] == 0.0) continue;
    total += lambda[i] * physics_loss(levels[i], stencil);
  }
  return total;
}

}  // namespace heatflow
