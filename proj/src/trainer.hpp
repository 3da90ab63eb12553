#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "field.hpp"
#include "model.hpp"
#include "stencil_loss.hpp"

namespace heatflow {

struct TrainConfig {
  int input_size = 128;
  int epochs = 128;
  int problems_per_epoch = 256;
  int batch_size = 16;
  float learning_rate = 2e-4f;
  uint64_t seed = 0;
  int eval_every = 8;      // epochs between held-out evaluations (0 = never)
  int eval_set_size = 32;
  bool curriculum = true;  // false pins lambda on the finest level throughout
};

struct EpochRecord {
  int epoch = 0;
  double progress = 0.0;
  std::vector<double> lambda;
  double mean_multiscale_loss = 0.0;
  double mean_fullres_loss = 0.0;
  std::optional<ErrorReport> eval;
  double wall_seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
};

/// Runs after each finished epoch (record already filled).
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Held-out evaluation hook, invoked on the eval_every cadence and after the
/// final epoch. Training itself never sees a solver: the loss is purely the
/// multiscale stencil loss of the network output.
using EvalCallback = std::function<ErrorReport(const Model&)>;

/// Curriculum progress for an epoch index: 0 at the first epoch, 1 at the
/// last (a single-epoch run counts as completed).
double train_progress(int epoch, int total_epochs);

/// Evaluation problems are drawn from a stream disjoint from training.
uint64_t derive_eval_seed(uint64_t train_seed);

/// Label-free training: samples fresh random boundary problems each batch,
/// minimizes the lambda-weighted multiscale physics loss with Adam, and
/// advances the coarse-to-fine schedule once per epoch.
TrainLog train(Model& model, const TrainConfig& config,
               const EvalCallback& eval = nullptr,
               const EpochCallback& on_epoch = nullptr);

void write_train_log_csv(const TrainLog& log, const std::filesystem::path& path);

/// Mean/std/max per-pixel error over all pixels of n held-out problems,
/// ground truth from the finite-difference oracle (cached under cache_dir
/// unless empty). Defined in evaluator.cpp.
ErrorReport evaluate(const Model& model, int n_problems, uint64_t seed,
                     const std::filesystem::path& cache_dir,
                     std::vector<ErrorReport>* per_problem = nullptr);

/// Same oracle loop with an arbitrary predictor (used to cross-check the
/// evaluation path itself).
using Predictor = std::function<TemperatureField(const TemperatureField&)>;
ErrorReport evaluate_with(const Predictor& predictor, int size, int n_problems,
                          uint64_t seed, const std::filesystem::path& cache_dir,
                          std::vector<ErrorReport>* per_problem = nullptr);

}  // namespace heatflow
