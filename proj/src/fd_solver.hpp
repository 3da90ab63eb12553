#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "field.hpp"

namespace heatflow {

enum class SolveMethod { jacobi, gauss_seidel };

const char* method_name(SolveMethod method);
SolveMethod parse_method(const std::string& name);

struct SolverConfig {
  SolveMethod method = SolveMethod::jacobi;
  double tolerance = 1e-6;  // max absolute nodal change per sweep, degrees
  int64_t max_sweeps = 1'000'000;
};

struct SolveTrace {
  int64_t sweeps_used = 0;
  bool converged = false;
  std::vector<double> residual_history;  // max nodal change, one entry per sweep
};

struct SolveResult {
  TemperatureField field;
  SolveTrace trace;
};

/// Per-cell fixed flags, row-major, nonzero = held at its initial value.
using BoundaryMask = std::vector<uint8_t>;

BoundaryMask border_mask(int height, int width);

/// Called after every sweep with the sweep index (1-based) and the current
/// field. Returning false stops the iteration early (trace reports
/// converged = false unless the tolerance was already met).
using SweepObserver =
    std::function<bool(int64_t sweep, const TemperatureField& current)>;

/// Iterates the five-point nodal average over all non-fixed cells until the
/// max nodal change per sweep drops to config.tolerance. Jacobi sweeps may be
/// parallelized across rows; Gauss-Seidel is sequential row-major.
SolveResult fd_solve(const TemperatureField& initial, const BoundaryMask& mask,
                     const SolverConfig& config,
                     const SweepObserver& observer = nullptr);

/// Interior set to the mean of the four per-edge averages (corners excluded
/// from each edge); border kept as-is.
TemperatureField constant_init(const TemperatureField& problem);

inline constexpr double kGroundTruthTolerance = 1e-8;
inline constexpr int64_t kGroundTruthMaxSweeps = 5'000'000;

/// Hex digest of the problem bytes; names the ground-truth cache entry.
std::string problem_digest(const TemperatureField& problem);

/// High-precision Gauss-Seidel solution (tolerance 1e-8), starting from
/// constant_init. Throws on non-convergence.
TemperatureField ground_truth(const TemperatureField& problem);

/// Same, but memoized on disk: cache_dir/<digest>.csv. Pass an empty path to
/// skip caching.
TemperatureField ground_truth(const TemperatureField& problem,
                              const std::filesystem::path& cache_dir);

}  // namespace heatflow
