#pragma once

#include <array>
#include <vector>

#include "field.hpp"

namespace heatflow {

/// 3x3 convolution kernel, row-major weights. Holds both the fixed physics
/// kernel and learned ones.
struct Stencil3x3 {
  std::array<double, 9> w{};

  /// [[0,-1,0],[-1,4,-1],[0,-1,0]]: zero response exactly on fields whose
  /// interior nodes equal the mean of their four neighbors.
  static Stencil3x3 canonical() {
    return {{0, -1, 0, -1, 4, -1, 0, -1, 0}};
  }

  double at(int r, int c) const { return w[static_cast<size_t>(r) * 3 + c]; }
  double& at(int r, int c) { return w[static_cast<size_t>(r) * 3 + c]; }
  double frobenius_norm() const;
  double center() const { return w[4]; }

  bool operator==(const Stencil3x3&) const = default;
};

void write_stencil_csv(const Stencil3x3& stencil,
                       const std::filesystem::path& path);
Stencil3x3 read_stencil_csv(const std::filesystem::path& path);

/// Valid-mode cross-correlation of the stencil with the field; output is
/// (h-2)x(w-2). Requires h, w >= 3.
TemperatureField physics_residual(const TemperatureField& field,
                                  const Stencil3x3& stencil);

/// Mean squared residual entry (sum normalized by the residual count, so
/// values are comparable across pyramid levels).
double physics_loss(const TemperatureField& field, const Stencil3x3& stencil);
double physics_loss(const TemperatureField& field);  // canonical stencil

/// Keeps every factor-th sample starting at index 0; no filtering.
/// Output is ceil(h/factor) x ceil(w/factor).
TemperatureField downsample_stride(const TemperatureField& field, int factor);

/// Level sizes for a square field: full resolution, then repeated stride-4
/// downsamples, stopping before any level would drop below min_size. A side
/// larger than min_size always gets at least one coarse level (a single-level
/// pyramid provides no coarse guidance at all), so 64 maps to {64, 16} while
/// 128 -> {128, 32} and 1024 -> {1024, 256, 64} follow the plain rule.
std::vector<int> pyramid_sizes(int side, int base_factor = 4,
                               int min_size = 32);
int pyramid_levels(int side, int base_factor = 4, int min_size = 32);

/// Stride from each level to the next (pyramid_sizes.size() - 1 entries).
std::vector<int> pyramid_strides(int side, int base_factor = 4,
                                 int min_size = 32);

/// Level 0 = full resolution; each next level a stride-4 pick of the previous.
std::vector<TemperatureField> build_pyramid(const TemperatureField& field,
                                            int base_factor = 4,
                                            int min_size = 32);

/// Per-level loss weights over training progress t in [0, 1]: a unit of mass
/// travels from the coarsest level (t = 0) to the finest (t = 1), split
/// between the two adjacent levels. The mass advances with t^2, reaching the
/// pure-finest regime only near the end of training; a long tail of
/// finest-only epochs lets the coarse structure drift once nothing anchors
/// it. Always a simplex point.
class LambdaSchedule {
 public:
  explicit LambdaSchedule(int levels);
  int levels() const { return levels_; }
  std::vector<double> weights(double progress) const;

 private:
  int levels_;
};

/// Sum of lambda_i(progress) * physics_loss(level_i) over the pyramid.
double multiscale_loss(const TemperatureField& field, const Stencil3x3& stencil,
                       const LambdaSchedule& schedule, double progress);

}  // namespace heatflow
