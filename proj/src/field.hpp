#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace heatflow {

/// Temperatures are generated on this range, and per-pixel errors are
/// reported as a percentage of it.
inline constexpr double kTemperatureRange = 100.0;

/// Dense 2-D grid of doubles, row-major. Used for temperature fields and for
/// derived grids (residuals, error maps). Value semantics; instances are
/// immutable once handed out, so sharing across threads is safe.
class TemperatureField {
 public:
  TemperatureField() = default;
  TemperatureField(int height, int width, double fill = 0.0);
  TemperatureField(int height, int width, std::vector<double> values);

  int height() const { return height_; }
  int width() const { return width_; }
  int64_t size() const { return static_cast<int64_t>(values_.size()); }

  double operator()(int i, int j) const {
    return values_[static_cast<size_t>(i) * width_ + j];
  }
  double& operator()(int i, int j) {
    return values_[static_cast<size_t>(i) * width_ + j];
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool same_shape(const TemperatureField& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool all_finite() const;

  bool operator==(const TemperatureField&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

/// Four edge temperatures defining one Dirichlet problem on an n-by-n plate.
struct BoundarySpec {
  double top = 0.0;
  double bottom = 0.0;
  double left = 0.0;
  double right = 0.0;
  int size = 0;
};

struct ErrorReport {
  double mean_percent = 0.0;
  double std_percent = 0.0;
  double max_percent = 0.0;
  int64_t n_pixels = 0;
};

/// Builds the initial condition: interior zero, border rows/columns carrying
/// the edge temperatures. Fill order is fixed (top, bottom, left, right), so
/// the left/right columns own the corners.
TemperatureField make_problem(const BoundarySpec& spec);

/// Draws the four edge temperatures independently from Uniform[0, 100],
/// in the order top, bottom, left, right.
BoundarySpec sample_boundary(Rng& rng, int size);

/// Per-pixel error of |predicted - truth| as a percentage of the 100-degree
/// generation range; mean, population std and max over all pixels.
ErrorReport per_pixel_error(const TemperatureField& predicted,
                            const TemperatureField& truth);

// File formats: CSV (one grid row per line, lossless shortest round-trip
// doubles) and PGM (P2, maxval 10000, pixel = round(T * 100), so temperature
// quantized to 0.01 degrees). read_field/write_field dispatch on extension.
void write_field_csv(const TemperatureField& field,
                     const std::filesystem::path& path);
TemperatureField read_field_csv(const std::filesystem::path& path);
void write_field_pgm(const TemperatureField& field,
                     const std::filesystem::path& path);
TemperatureField read_field_pgm(const std::filesystem::path& path);
void write_field(const TemperatureField& field,
                 const std::filesystem::path& path);
TemperatureField read_field(const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double (locale-independent).
std::string format_double(double value);

}  // namespace heatflow
