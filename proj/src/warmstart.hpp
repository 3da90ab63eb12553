#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fd_solver.hpp"
#include "model.hpp"

namespace heatflow {

struct BenchConfig {
  int n_problems = 32;
  uint64_t seed = 0;
  SolveMethod method = SolveMethod::jacobi;
  /// Descending per-pixel error thresholds (percent). The solver for each
  /// initialization stops once its error drops below the smallest one (or at
  /// tolerance/max_sweeps). An empty list runs to tolerance.
  std::vector<double> thresholds = {5.0, 1.0, 0.5, 0.1};
  double tolerance = 1e-8;
  int64_t max_sweeps = 2'000'000;
  int sample_every = 1;  // record the error curve every k-th sweep
  std::filesystem::path cache_dir;
};

struct InitCurve {
  std::string init_kind;  // "warm" or "constant"
  /// (sweep, mean_percent error vs ground truth); sweep 0 is the
  /// initialization itself.
  std::vector<std::pair<int64_t, double>> errors;
  /// First sweep count at which the error was <= threshold; thresholds never
  /// reached are absent.
  std::map<double, int64_t> sweeps_to_threshold;
};

struct BenchResult {
  int problem_id = 0;
  InitCurve warm;
  InitCurve constant;
};

/// Provides the warm-start field for a problem (normally a trained model's
/// prediction).
using WarmStartFn = std::function<TemperatureField(const TemperatureField&)>;

std::vector<BenchResult> run_bench(const WarmStartFn& warm_start,
                                   int problem_size, const BenchConfig& config);
std::vector<BenchResult> run_bench(const Model& model,
                                   const BenchConfig& config);

struct ThresholdSummary {
  double threshold = 0.0;
  double median_ratio = 0.0;       // constant sweeps / warm sweeps
  double warm_win_fraction = 0.0;  // problems where warm is strictly fewer
  int n_compared = 0;
};

std::vector<ThresholdSummary> summarize(const std::vector<BenchResult>& results,
                                        const std::vector<double>& thresholds);

/// CSV of every recorded sweep (problem_id, init_kind, sweep, mean_percent;
/// one row per executed sweep) plus a JSON summary of per-threshold median
/// speedups. Refuses empty results.
void emit_curves(const std::vector<BenchResult>& results,
                 const std::vector<double>& thresholds,
                 const std::filesystem::path& csv_path,
                 const std::filesystem::path& json_path);

}  // namespace heatflow
