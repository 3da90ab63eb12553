#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "stencil_loss.hpp"

namespace heatflow {

enum class StencilConstraint { unit_norm, fixed_center, none };

const char* constraint_name(StencilConstraint constraint);
StencilConstraint parse_constraint(const std::string& name);

struct KernelLearnConfig {
  int grid_size = 8;
  int n_samples = 8;   // converged fields per optimization step
  int steps = 5000;
  float learning_rate = 1e-3f;
  StencilConstraint constraint = StencilConstraint::unit_norm;
  uint64_t seed = 0;
};

struct KernelStepRecord {
  int step = 0;
  double objective = 0.0;       // sum of |residual| over the step's batch
  double frobenius_norm = 0.0;  // kernel magnitude after the update
};

struct KernelLearnResult {
  Stencil3x3 stencil;
  std::vector<KernelStepRecord> history;
  double final_objective = 0.0;
};

/// Recovers a 3x3 kernel from converged solution fields only: each step
/// solves fresh random boundary problems to high precision, runs the
/// learnable kernel over them (valid mode), and minimizes the summed absolute
/// response with Adam. The unconstrained objective has a trivial minimum at
/// the zero kernel, so a constraint projection runs after every update:
///   unit_norm    - rescale to unit Frobenius norm
///   fixed_center - pin the center weight at its initial value
///   none         - no projection (the kernel magnitude shrinks over time)
KernelLearnResult learn_kernel(const KernelLearnConfig& config);

void write_kernel_history_csv(const std::vector<KernelStepRecord>& history,
                              const std::filesystem::path& path);

/// Unit Frobenius norm with the sign fixed so the center weight is positive.
Stencil3x3 normalize_stencil(const Stencil3x3& stencil);

double cosine_similarity(const Stencil3x3& a, const Stencil3x3& b);

/// Mean of the four edge-adjacent weights divided by the center weight
/// (-0.25 for any scaled five-point kernel).
double off_center_ratio(const Stencil3x3& stencil);

}  // namespace heatflow
