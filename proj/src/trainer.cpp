// Label-free training loop. Intentionally does not include fd_solver.hpp:
// the loss path has no way to read a solved field, only the eval callback
// (wired up by callers) touches the oracle.
#include "trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace heatflow {

using ad::Tensor;

double train_progress(int epoch, int total_epochs) {
  if (total_epochs <= 1) return 1.0;
  return static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
}

uint64_t derive_eval_seed(uint64_t train_seed) {
  uint64_t x = train_seed ^ 0x7fb5d329728ea185ULL;
  return Rng::splitmix64(x);
}

namespace {

std::string lambda_str(const std::vector<double>& lambda) {
  std::string s = "[";
  for (size_t i = 0; i < lambda.size(); ++i) {
    if (i > 0) s += ";";
    s += format_double(lambda[i]);
  }
  return s + "]";
}

Tensor stencil_tensor() {
  auto canonical = Stencil3x3::canonical();
  std::vector<float> w(canonical.w.begin(), canonical.w.end());
  return Tensor::from_data({1, 1, 3, 3}, std::move(w), false);
}

}  // namespace

TrainLog train(Model& model, const TrainConfig& config,
               const EvalCallback& eval, const EpochCallback& on_epoch) {
  if (model.input_size() != config.input_size) {
    fail(ErrorCode::dimension_mismatch,
         "train: model input size " + std::to_string(model.input_size()) +
             " does not match config " + std::to_string(config.input_size));
  }
  if (config.epochs < 1 || config.problems_per_epoch < 1 ||
      config.batch_size < 1) {
    fail(ErrorCode::invalid_argument,
         "train: epochs, problems_per_epoch and batch_size must be >= 1");
  }
  const int n = config.input_size;
  const int batches_per_epoch =
      std::max(1, config.problems_per_epoch / config.batch_size);
  const auto level_strides = pyramid_strides(n);
  const int levels = static_cast<int>(level_strides.size()) + 1;
  const LambdaSchedule schedule(levels);

  Rng data_rng(config.seed);
  ad::Adam adam(model.parameters(), ad::AdamConfig{config.learning_rate});
  Tensor stencil = stencil_tensor();

  TrainLog log;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const double t = config.curriculum ? train_progress(epoch, config.epochs) : 1.0;
    const auto lambda = schedule.weights(t);

    double sum_total = 0.0, sum_fullres = 0.0;
    for (int batch = 0; batch < batches_per_epoch; ++batch) {
      std::vector<float> batch_data(static_cast<size_t>(config.batch_size) * n * n);
      for (int s = 0; s < config.batch_size; ++s) {
        auto problem = make_problem(sample_boundary(data_rng, n));
        float* dst = batch_data.data() + static_cast<size_t>(s) * n * n;
        auto values = problem.values();
        for (int64_t i = 0; i < problem.size(); ++i) {
          dst[i] = static_cast<float>(values[static_cast<size_t>(i)] /
                                      kTemperatureRange);
        }
      }
      Tensor input = Tensor::from_data({config.batch_size, 1, n, n},
                                       std::move(batch_data), false);
      Tensor output = model.forward(input);

      // Per-level losses: every level's value is recorded, but only levels
      // with nonzero weight contribute to the graph that gets differentiated.
      std::vector<Tensor> level_losses;
      Tensor level = output;
      for (int lv = 0; lv < levels; ++lv) {
        if (lv > 0) {
          const int stride = level_strides[static_cast<size_t>(lv - 1)];
          level = ad::slice_strided(level, 0, stride, 0, stride);
        }
        level_losses.push_back(
            ad::mean(ad::square(ad::conv2d(level, stencil, Tensor(), 1, 0))));
      }
      Tensor total;
      for (int lv = 0; lv < levels; ++lv) {
        if (lambda[static_cast<size_t>(lv)] == 0.0) continue;
        Tensor term = ad::scale(level_losses[static_cast<size_t>(lv)],
                                static_cast<float>(lambda[static_cast<size_t>(lv)]));
        total = total.defined() ? ad::add(total, term) : term;
      }

      const double total_value = static_cast<double>(total.scalar());
      if (!std::isfinite(total_value)) {
        fail(ErrorCode::nan_detected,
             "train: non-finite loss at epoch " + std::to_string(epoch) +
                 ", batch " + std::to_string(batch) + ", lambda " +
                 lambda_str(lambda));
      }
      ad::backward(total);
      adam.step();
      adam.zero_grad();

      sum_total += total_value;
      sum_fullres += static_cast<double>(level_losses[0].scalar());
    }

    EpochRecord record;
    record.epoch = epoch;
    record.progress = t;
    record.lambda = lambda;
    record.mean_multiscale_loss = sum_total / batches_per_epoch;
    record.mean_fullres_loss = sum_fullres / batches_per_epoch;
    const bool eval_now =
        eval && ((config.eval_every > 0 && (epoch + 1) % config.eval_every == 0) ||
                 epoch + 1 == config.epochs);
    if (eval_now) record.eval = eval(model);
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      epoch_start)
            .count();
    log.epochs.push_back(record);
    model.set_meta({epoch + 1, config.seed, t});
    if (on_epoch) on_epoch(record);
  }
  return log;
}

void write_train_log_csv(const TrainLog& log,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot open for writing: " + path.string());
  out << "epoch,progress,lambda,multiscale_loss,fullres_loss,"
         "eval_mean_percent,eval_std_percent,eval_max_percent,wall_seconds\n";
  for (const auto& r : log.epochs) {
    std::string lambda;
    for (size_t i = 0; i < r.lambda.size(); ++i) {
      if (i > 0) lambda += ';';
      lambda += format_double(r.lambda[i]);
    }
    out << r.epoch << ',' << format_double(r.progress) << ',' << lambda << ','
        << format_double(r.mean_multiscale_loss) << ','
        << format_double(r.mean_fullres_loss) << ',';
    if (r.eval) {
      out << format_double(r.eval->mean_percent) << ','
          << format_double(r.eval->std_percent) << ','
          << format_double(r.eval->max_percent);
    } else {
      out << ",,";
    }
    out << ',' << format_double(r.wall_seconds) << '\n';
  }
  if (!out) fail(ErrorCode::io, "write failed: " + path.string());
}

}  // namespace heatflow
