#include "fd_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "parallel.hpp"

namespace heatflow {

const char* method_name(SolveMethod method) {
  return method == SolveMethod::jacobi ? "jacobi" : "gauss-seidel";
}

SolveMethod parse_method(const std::string& name) {
  if (name == "jacobi") return SolveMethod::jacobi;
  if (name == "gauss-seidel" || name == "gauss_seidel") {
    return SolveMethod::gauss_seidel;
  }
  fail(ErrorCode::invalid_argument,
       "unknown solve method '" + name + "' (jacobi or gauss-seidel)");
}

BoundaryMask border_mask(int height, int width) {
  BoundaryMask mask(static_cast<size_t>(height) * width, 0);
  for (int j = 0; j < width; ++j) {
    mask[j] = 1;
    mask[static_cast<size_t>(height - 1) * width + j] = 1;
  }
  for (int i = 0; i < height; ++i) {
    mask[static_cast<size_t>(i) * width] = 1;
    mask[static_cast<size_t>(i) * width + width - 1] = 1;
  }
  return mask;
}

namespace {

void validate_inputs(const TemperatureField& initial, const BoundaryMask& mask,
                     const SolverConfig& config) {
  const int h = initial.height(), w = initial.width();
  if (h < 3 || w < 3) {
    fail(ErrorCode::invalid_argument,
         "fd_solve: grid must be at least 3x3, got " + std::to_string(h) +
             "x" + std::to_string(w));
  }
  if (mask.size() != static_cast<size_t>(h) * w) {
    fail(ErrorCode::dimension_mismatch,
         "fd_solve: mask size " + std::to_string(mask.size()) +
             " does not match grid " + std::to_string(h) + "x" +
             std::to_string(w));
  }
  if (!initial.all_finite()) {
    fail(ErrorCode::nan_detected, "fd_solve: initial field contains NaN/inf");
  }
  if (!(config.tolerance > 0.0)) {
    fail(ErrorCode::invalid_argument, "fd_solve: tolerance must be positive");
  }
  if (config.max_sweeps < 1) {
    fail(ErrorCode::invalid_argument, "fd_solve: max_sweeps must be >= 1");
  }
  for (int j = 0; j < w; ++j) {
    if (!mask[j] || !mask[static_cast<size_t>(h - 1) * w + j]) {
      fail(ErrorCode::invalid_argument,
           "fd_solve: mask must fix all border cells");
    }
  }
  for (int i = 0; i < h; ++i) {
    if (!mask[static_cast<size_t>(i) * w] ||
        !mask[static_cast<size_t>(i) * w + w - 1]) {
      fail(ErrorCode::invalid_argument,
           "fd_solve: mask must fix all border cells");
    }
  }
}

}  // namespace

SolveResult fd_solve(const TemperatureField& initial, const BoundaryMask& mask,
                     const SolverConfig& config, const SweepObserver& observer) {
  validate_inputs(initial, mask, config);
  const int h = initial.height(), w = initial.width();

  SolveResult result{initial, {}};
  TemperatureField& cur = result.field;
  SolveTrace& trace = result.trace;

  if (config.method == SolveMethod::jacobi) {
    TemperatureField next = cur;
    std::vector<double> row_residual(static_cast<size_t>(h - 2), 0.0);
    for (int64_t sweep = 1; sweep <= config.max_sweeps; ++sweep) {
      parallel_for(1, h - 1, [&](int64_t r0, int64_t r1) {
        for (int64_t i = r0; i < r1; ++i) {
          const double* up = &cur(static_cast<int>(i) - 1, 0);
          const double* mid = &cur(static_cast<int>(i), 0);
          const double* down = &cur(static_cast<int>(i) + 1, 0);
          double* out = &next(static_cast<int>(i), 0);
          const uint8_t* fixed = &mask[static_cast<size_t>(i) * w];
          double local_max = 0.0;
          for (int j = 1; j < w - 1; ++j) {
            if (fixed[j]) {
              out[j] = mid[j];
              continue;
            }
            double v = 0.25 * (up[j] + down[j] + mid[j - 1] + mid[j + 1]);
            local_max = std::max(local_max, std::abs(v - mid[j]));
            out[j] = v;
          }
          row_residual[static_cast<size_t>(i - 1)] = local_max;
        }
      });
      double residual = 0.0;
      for (double r : row_residual) residual = std::max(residual, r);
      std::swap(cur, next);
      trace.sweeps_used = sweep;
      trace.residual_history.push_back(residual);
      bool keep_going = observer ? observer(sweep, cur) : true;
      if (residual <= config.tolerance) {
        trace.converged = true;
        break;
      }
      if (!keep_going) break;
    }
  } else {
    for (int64_t sweep = 1; sweep <= config.max_sweeps; ++sweep) {
      double residual = 0.0;
      for (int i = 1; i < h - 1; ++i) {
        const uint8_t* fixed = &mask[static_cast<size_t>(i) * w];
        double* mid = &cur(i, 0);
        const double* up = &cur(i - 1, 0);
        const double* down = &cur(i + 1, 0);
        for (int j = 1; j < w - 1; ++j) {
          if (fixed[j]) continue;
          double v = 0.25 * (up[j] + down[j] + mid[j - 1] + mid[j + 1]);
          residual = std::max(residual, std::abs(v - mid[j]));
          mid[j] = v;
        }
      }
      trace.sweeps_used = sweep;
      trace.residual_history.push_back(residual);
      bool keep_going = observer ? observer(sweep, cur) : true;
      if (residual <= config.tolerance) {
        trace.converged = true;
        break;
      }
      if (!keep_going) break;
    }
  }
  return result;
}

TemperatureField constant_init(const TemperatureField& problem) {
  const int h = problem.height(), w = problem.width();
  if (h < 3 || w < 3) {
    fail(ErrorCode::invalid_argument,
         "constant_init: grid must be at least 3x3");
  }
  double top = 0.0, bottom = 0.0, left = 0.0, right = 0.0;
  for (int j = 1; j < w - 1; ++j) {
    top += problem(0, j);
    bottom += problem(h - 1, j);
  }
  for (int i = 1; i < h - 1; ++i) {
    left += problem(i, 0);
    right += problem(i, w - 1);
  }
  top /= (w - 2);
  bottom /= (w - 2);
  left /= (h - 2);
  right /= (h - 2);
  const double mean = (top + bottom + left + right) / 4.0;

  TemperatureField out = problem;
  for (int i = 1; i < h - 1; ++i) {
    for (int j = 1; j < w - 1; ++j) out(i, j) = mean;
  }
  return out;
}

std::string problem_digest(const TemperatureField& problem) {
  // FNV-1a over dimensions and raw value bytes.
  uint64_t hash = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&hash](const void* data, size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      hash ^= bytes[i];
      hash *= 0x100000001b3ULL;
    }
  };
  int64_t dims[2] = {problem.height(), problem.width()};
  mix_bytes(dims, sizeof(dims));
  auto values = problem.values();
  mix_bytes(values.data(), values.size() * sizeof(double));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return std::string(buf);
}

TemperatureField ground_truth(const TemperatureField& problem) {
  SolverConfig config{SolveMethod::gauss_seidel, kGroundTruthTolerance,
                      kGroundTruthMaxSweeps};
  auto result = fd_solve(constant_init(problem),
                         border_mask(problem.height(), problem.width()), config);
  if (!result.trace.converged) {
    fail(ErrorCode::no_convergence,
         "ground_truth: no convergence after " +
             std::to_string(result.trace.sweeps_used) + " sweeps");
  }
  return std::move(result.field);
}

TemperatureField ground_truth(const TemperatureField& problem,
                              const std::filesystem::path& cache_dir) {
  if (cache_dir.empty()) return ground_truth(problem);
  std::filesystem::create_directories(cache_dir);
  auto entry = cache_dir / (problem_digest(problem) + ".csv");
  if (std::filesystem::exists(entry)) {
    auto cached = read_field_csv(entry);
    if (cached.same_shape(problem)) return cached;
    // Hash collision or stale entry: fall through and overwrite.
  }
  auto solution = ground_truth(problem);
  auto tmp = entry;
  tmp += ".tmp";
  write_field_csv(solution, tmp);
  std::filesystem::rename(tmp, entry);
  return solution;
}

}  // namespace heatflow
