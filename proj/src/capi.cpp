// extern "C" surface of the shared library. Every entry point translates
// exceptions from the core into status codes and a thread-local message.
#include "heatflow/heatflow.h"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>

#include "fd_solver.hpp"
#include "field.hpp"
#include "kernel_learner.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stencil_loss.hpp"
#include "trainer.hpp"
#include "warmstart.hpp"

struct hf_field {
  heatflow::TemperatureField value;
};

struct hf_rng {
  heatflow::Rng value;
};

struct hf_model {
  heatflow::Model value;
};

namespace {

thread_local std::string t_last_error;

hf_status map_code(heatflow::ErrorCode code) {
  using heatflow::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_argument: return HF_ERR_INVALID_ARGUMENT;
    case ErrorCode::dimension_mismatch: return HF_ERR_DIMENSION_MISMATCH;
    case ErrorCode::io: return HF_ERR_IO;
    case ErrorCode::parse: return HF_ERR_PARSE;
    case ErrorCode::format: return HF_ERR_FORMAT;
    case ErrorCode::no_convergence: return HF_ERR_NO_CONVERGENCE;
    case ErrorCode::nan_detected: return HF_ERR_NAN;
    case ErrorCode::internal: return HF_ERR_INTERNAL;
  }
  return HF_ERR_INTERNAL;
}

template <typename Fn>
hf_status guarded(Fn&& fn) {
  try {
    fn();
    t_last_error.clear();
    return HF_OK;
  } catch (const heatflow::Error& e) {
    t_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return HF_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return HF_ERR_INTERNAL;
  }
}

hf_status invalid(const char* message) {
  t_last_error = message;
  return HF_ERR_INVALID_ARGUMENT;
}

std::filesystem::path path_or_empty(const char* path) {
  return (path == nullptr) ? std::filesystem::path{} : std::filesystem::path{path};
}

hf_error_report to_c(const heatflow::ErrorReport& report) {
  return {report.mean_percent, report.std_percent, report.max_percent,
          report.n_pixels};
}

heatflow::SolveMethod to_method(hf_method method) {
  return method == HF_METHOD_JACOBI ? heatflow::SolveMethod::jacobi
                                    : heatflow::SolveMethod::gauss_seidel;
}

void write_per_problem_csv(const std::vector<heatflow::ErrorReport>& reports,
                           const std::filesystem::path& path) {
  std::string body = "problem,mean_percent,std_percent,max_percent,n_pixels\n";
  for (size_t i = 0; i < reports.size(); ++i) {
    body += std::to_string(i) + ',' +
            heatflow::format_double(reports[i].mean_percent) + ',' +
            heatflow::format_double(reports[i].std_percent) + ',' +
            heatflow::format_double(reports[i].max_percent) + ',' +
            std::to_string(reports[i].n_pixels) + '\n';
  }
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (f == nullptr) {
    heatflow::fail(heatflow::ErrorCode::io,
                   "cannot open for writing: " + path.string());
  }
  std::fwrite(body.data(), 1, body.size(), f);
  std::fclose(f);
}

}  // namespace

extern "C" {

const char* hf_version(void) { return "0.1.0"; }

const char* hf_status_name(hf_status status) {
  switch (status) {
    case HF_OK: return "ok";
    case HF_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case HF_ERR_DIMENSION_MISMATCH: return "dimension_mismatch";
    case HF_ERR_IO: return "io";
    case HF_ERR_PARSE: return "parse";
    case HF_ERR_FORMAT: return "format";
    case HF_ERR_NO_CONVERGENCE: return "no_convergence";
    case HF_ERR_NAN: return "nan";
    case HF_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* hf_last_error(void) { return t_last_error.c_str(); }

void hf_set_threads(int n) { heatflow::set_threads(n); }

int hf_threads(void) { return heatflow::thread_count(); }

hf_status hf_field_create(int height, int width, double fill, hf_field** out) {
  if (out == nullptr) return invalid("hf_field_create: out is NULL");
  return guarded([&] {
    *out = new hf_field{heatflow::TemperatureField(height, width, fill)};
  });
}

void hf_field_free(hf_field* field) { delete field; }

int hf_field_height(const hf_field* field) {
  return field == nullptr ? 0 : field->value.height();
}

int hf_field_width(const hf_field* field) {
  return field == nullptr ? 0 : field->value.width();
}

const double* hf_field_data(const hf_field* field) {
  return field == nullptr ? nullptr : field->value.values().data();
}

hf_status hf_field_get(const hf_field* field, int row, int col, double* out) {
  if (field == nullptr || out == nullptr) {
    return invalid("hf_field_get: NULL argument");
  }
  if (row < 0 || row >= field->value.height() || col < 0 ||
      col >= field->value.width()) {
    return invalid("hf_field_get: index out of range");
  }
  *out = field->value(row, col);
  return HF_OK;
}

hf_status hf_field_set(hf_field* field, int row, int col, double value) {
  if (field == nullptr) return invalid("hf_field_set: field is NULL");
  if (row < 0 || row >= field->value.height() || col < 0 ||
      col >= field->value.width()) {
    return invalid("hf_field_set: index out of range");
  }
  field->value(row, col) = value;
  return HF_OK;
}

hf_status hf_field_read(const char* path, hf_field** out) {
  if (path == nullptr || out == nullptr) {
    return invalid("hf_field_read: NULL argument");
  }
  return guarded([&] { *out = new hf_field{heatflow::read_field(path)}; });
}

hf_status hf_field_write(const hf_field* field, const char* path) {
  if (field == nullptr || path == nullptr) {
    return invalid("hf_field_write: NULL argument");
  }
  return guarded([&] { heatflow::write_field(field->value, path); });
}

hf_status hf_per_pixel_error(const hf_field* predicted, const hf_field* truth,
                             hf_error_report* out) {
  if (predicted == nullptr || truth == nullptr || out == nullptr) {
    return invalid("hf_per_pixel_error: NULL argument");
  }
  return guarded([&] {
    *out = to_c(heatflow::per_pixel_error(predicted->value, truth->value));
  });
}

hf_status hf_rng_create(uint64_t seed, hf_rng** out) {
  if (out == nullptr) return invalid("hf_rng_create: out is NULL");
  return guarded([&] { *out = new hf_rng{heatflow::Rng(seed)}; });
}

void hf_rng_free(hf_rng* rng) { delete rng; }

hf_status hf_boundary_sample(hf_rng* rng, int size, double edges_out[4]) {
  if (rng == nullptr || edges_out == nullptr) {
    return invalid("hf_boundary_sample: NULL argument");
  }
  return guarded([&] {
    auto spec = heatflow::sample_boundary(rng->value, size);
    edges_out[0] = spec.top;
    edges_out[1] = spec.bottom;
    edges_out[2] = spec.left;
    edges_out[3] = spec.right;
  });
}

hf_status hf_problem_create(int size, const double edges[4], hf_field** out) {
  if (edges == nullptr || out == nullptr) {
    return invalid("hf_problem_create: NULL argument");
  }
  return guarded([&] {
    heatflow::BoundarySpec spec{edges[0], edges[1], edges[2], edges[3], size};
    *out = new hf_field{heatflow::make_problem(spec)};
  });
}

hf_status hf_fd_solve(const hf_field* initial, hf_method method,
                      double tolerance, int64_t max_sweeps,
                      const char* trace_csv_path, hf_field** solution,
                      hf_solve_stats* stats) {
  if (initial == nullptr || solution == nullptr) {
    return invalid("hf_fd_solve: NULL argument");
  }
  return guarded([&] {
    heatflow::SolverConfig config{to_method(method), tolerance, max_sweeps};
    auto result = heatflow::fd_solve(
        initial->value,
        heatflow::border_mask(initial->value.height(), initial->value.width()),
        config);
    if (trace_csv_path != nullptr) {
      std::string body = "sweep,max_nodal_change\n";
      for (size_t i = 0; i < result.trace.residual_history.size(); ++i) {
        body += std::to_string(i + 1) + ',' +
                heatflow::format_double(result.trace.residual_history[i]) + '\n';
      }
      std::FILE* f = std::fopen(trace_csv_path, "wb");
      if (f == nullptr) {
        heatflow::fail(heatflow::ErrorCode::io,
                       std::string("cannot open for writing: ") +
                           trace_csv_path);
      }
      std::fwrite(body.data(), 1, body.size(), f);
      std::fclose(f);
    }
    if (stats != nullptr) {
      stats->sweeps_used = result.trace.sweeps_used;
      stats->converged = result.trace.converged ? 1 : 0;
      stats->final_residual = result.trace.residual_history.empty()
                                  ? 0.0
                                  : result.trace.residual_history.back();
    }
    *solution = new hf_field{std::move(result.field)};
  });
}

hf_status hf_constant_init(const hf_field* problem, hf_field** out) {
  if (problem == nullptr || out == nullptr) {
    return invalid("hf_constant_init: NULL argument");
  }
  return guarded(
      [&] { *out = new hf_field{heatflow::constant_init(problem->value)}; });
}

hf_status hf_ground_truth(const hf_field* problem, const char* cache_dir,
                          hf_field** out) {
  if (problem == nullptr || out == nullptr) {
    return invalid("hf_ground_truth: NULL argument");
  }
  return guarded([&] {
    *out = new hf_field{
        heatflow::ground_truth(problem->value, path_or_empty(cache_dir))};
  });
}

hf_status hf_physics_loss(const hf_field* field, double* out) {
  if (field == nullptr || out == nullptr) {
    return invalid("hf_physics_loss: NULL argument");
  }
  return guarded([&] { *out = heatflow::physics_loss(field->value); });
}

hf_status hf_model_load(const char* checkpoint_path, hf_model** out) {
  if (checkpoint_path == nullptr || out == nullptr) {
    return invalid("hf_model_load: NULL argument");
  }
  return guarded(
      [&] { *out = new hf_model{heatflow::Model::load(checkpoint_path)}; });
}

void hf_model_free(hf_model* model) { delete model; }

int hf_model_input_size(const hf_model* model) {
  return model == nullptr ? 0 : model->value.input_size();
}

hf_status hf_model_predict(const hf_model* model, const hf_field* problem,
                           hf_field** out) {
  if (model == nullptr || problem == nullptr || out == nullptr) {
    return invalid("hf_model_predict: NULL argument");
  }
  return guarded(
      [&] { *out = new hf_field{model->value.predict(problem->value)}; });
}

void hf_train_defaults(hf_train_options* options) {
  if (options == nullptr) return;
  heatflow::TrainConfig defaults;
  options->input_size = defaults.input_size;
  options->epochs = defaults.epochs;
  options->problems_per_epoch = defaults.problems_per_epoch;
  options->batch_size = defaults.batch_size;
  options->learning_rate = static_cast<double>(defaults.learning_rate);
  options->seed = defaults.seed;
  options->eval_every = defaults.eval_every;
  options->eval_set_size = defaults.eval_set_size;
  options->curriculum = defaults.curriculum ? 1 : 0;
  options->verbose = 0;
  options->out_dir = nullptr;
  options->cache_dir = nullptr;
}

hf_status hf_train(const hf_train_options* options, hf_train_summary* out) {
  if (options == nullptr) return invalid("hf_train: options is NULL");
  if (options->out_dir == nullptr) {
    return invalid("hf_train: out_dir is required");
  }
  return guarded([&] {
    heatflow::TrainConfig config;
    config.input_size = options->input_size;
    config.epochs = options->epochs;
    config.problems_per_epoch = options->problems_per_epoch;
    config.batch_size = options->batch_size;
    config.learning_rate = static_cast<float>(options->learning_rate);
    config.seed = options->seed;
    config.eval_every = options->eval_every;
    config.eval_set_size = options->eval_set_size;
    config.curriculum = options->curriculum != 0;

    const std::filesystem::path out_dir(options->out_dir);
    std::filesystem::create_directories(out_dir);
    const auto cache_dir = path_or_empty(options->cache_dir);

    heatflow::Model model = heatflow::Model::build(
        {config.input_size, 16, 512, config.seed});

    const uint64_t eval_seed = heatflow::derive_eval_seed(config.seed);
    heatflow::EvalCallback eval;
    if (config.eval_every > 0 && config.eval_set_size > 0) {
      eval = [&](const heatflow::Model& m) {
        return heatflow::evaluate(m, config.eval_set_size, eval_seed,
                                  cache_dir);
      };
    }
    heatflow::EpochCallback on_epoch;
    if (options->verbose != 0) {
      const int total = config.epochs;
      on_epoch = [total](const heatflow::EpochRecord& r) {
        std::fprintf(stderr, "epoch %d/%d loss=%.3e fullres=%.3e", r.epoch + 1,
                     total, r.mean_multiscale_loss, r.mean_fullres_loss);
        if (r.eval) {
          std::fprintf(stderr, " eval_mean=%.3f%%", r.eval->mean_percent);
        }
        std::fprintf(stderr, " (%.1fs)\n", r.wall_seconds);
      };
    }

    const auto start = std::chrono::steady_clock::now();
    auto log = heatflow::train(model, config, eval, on_epoch);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();

    model.save(out_dir / "checkpoint.lfck");
    heatflow::write_train_log_csv(log, out_dir / "trainlog.csv");

    if (out != nullptr) {
      *out = {};
      out->wall_seconds = wall;
      out->final_multiscale_loss = log.epochs.back().mean_multiscale_loss;
      for (auto it = log.epochs.rbegin(); it != log.epochs.rend(); ++it) {
        if (it->eval) {
          out->final_eval = to_c(*it->eval);
          break;
        }
      }
    }
  });
}

hf_status hf_evaluate(const hf_model* model, int n_problems, uint64_t seed,
                      const char* cache_dir, const char* per_problem_csv_path,
                      hf_error_report* out) {
  if (model == nullptr || out == nullptr) {
    return invalid("hf_evaluate: NULL argument");
  }
  return guarded([&] {
    std::vector<heatflow::ErrorReport> per_problem;
    auto report =
        heatflow::evaluate(model->value, n_problems, seed,
                           path_or_empty(cache_dir), &per_problem);
    if (per_problem_csv_path != nullptr) {
      write_per_problem_csv(per_problem, per_problem_csv_path);
    }
    *out = to_c(report);
  });
}

void hf_kernel_learn_defaults(hf_kernel_learn_options* options) {
  if (options == nullptr) return;
  heatflow::KernelLearnConfig defaults;
  options->grid_size = defaults.grid_size;
  options->n_samples = defaults.n_samples;
  options->steps = defaults.steps;
  options->learning_rate = static_cast<double>(defaults.learning_rate);
  options->constraint = HF_CONSTRAINT_UNIT_NORM;
  options->seed = defaults.seed;
}

hf_status hf_learn_kernel(const hf_kernel_learn_options* options,
                          const char* history_csv_path, double stencil_out[9],
                          double* final_objective) {
  if (options == nullptr || stencil_out == nullptr) {
    return invalid("hf_learn_kernel: NULL argument");
  }
  return guarded([&] {
    heatflow::KernelLearnConfig config;
    config.grid_size = options->grid_size;
    config.n_samples = options->n_samples;
    config.steps = options->steps;
    config.learning_rate = static_cast<float>(options->learning_rate);
    switch (options->constraint) {
      case HF_CONSTRAINT_UNIT_NORM:
        config.constraint = heatflow::StencilConstraint::unit_norm;
        break;
      case HF_CONSTRAINT_FIXED_CENTER:
        config.constraint = heatflow::StencilConstraint::fixed_center;
        break;
      case HF_CONSTRAINT_NONE:
        config.constraint = heatflow::StencilConstraint::none;
        break;
    }
    config.seed = options->seed;
    auto result = heatflow::learn_kernel(config);
    if (history_csv_path != nullptr) {
      heatflow::write_kernel_history_csv(result.history, history_csv_path);
    }
    for (int i = 0; i < 9; ++i) stencil_out[i] = result.stencil.w[i];
    if (final_objective != nullptr) *final_objective = result.final_objective;
  });
}

hf_status hf_normalize_stencil(const double stencil_in[9],
                               double stencil_out[9]) {
  if (stencil_in == nullptr || stencil_out == nullptr) {
    return invalid("hf_normalize_stencil: NULL argument");
  }
  return guarded([&] {
    heatflow::Stencil3x3 s;
    for (int i = 0; i < 9; ++i) s.w[i] = stencil_in[i];
    auto normalized = heatflow::normalize_stencil(s);
    for (int i = 0; i < 9; ++i) stencil_out[i] = normalized.w[i];
  });
}

void hf_bench_defaults(hf_bench_options* options) {
  if (options == nullptr) return;
  heatflow::BenchConfig defaults;
  options->n_problems = defaults.n_problems;
  options->seed = defaults.seed;
  options->method = HF_METHOD_JACOBI;
  options->thresholds = nullptr;  // defaults to {5, 1, 0.5, 0.1}
  options->n_thresholds = 0;
  options->tolerance = defaults.tolerance;
  options->max_sweeps = defaults.max_sweeps;
  options->sample_every = defaults.sample_every;
  options->cache_dir = nullptr;
}

hf_status hf_warmstart_bench(const hf_model* model,
                             const hf_bench_options* options,
                             const char* curves_csv_path,
                             const char* summary_json_path,
                             hf_bench_summary* out) {
  if (model == nullptr || options == nullptr) {
    return invalid("hf_warmstart_bench: NULL argument");
  }
  if (options->n_thresholds > HF_BENCH_MAX_THRESHOLDS) {
    return invalid("hf_warmstart_bench: too many thresholds");
  }
  return guarded([&] {
    heatflow::BenchConfig config;
    config.n_problems = options->n_problems;
    config.seed = options->seed;
    config.method = to_method(options->method);
    if (options->thresholds != nullptr && options->n_thresholds > 0) {
      config.thresholds.assign(options->thresholds,
                               options->thresholds + options->n_thresholds);
    }
    config.tolerance = options->tolerance;
    config.max_sweeps = options->max_sweeps;
    config.sample_every = options->sample_every;
    config.cache_dir = path_or_empty(options->cache_dir);

    auto results = heatflow::run_bench(model->value, config);
    if (curves_csv_path != nullptr && summary_json_path != nullptr) {
      heatflow::emit_curves(results, config.thresholds, curves_csv_path,
                            summary_json_path);
    }
    if (out != nullptr) {
      *out = {};
      auto summaries = heatflow::summarize(results, config.thresholds);
      out->n_thresholds = static_cast<int>(summaries.size());
      for (size_t i = 0; i < summaries.size(); ++i) {
        out->thresholds[i] = summaries[i].threshold;
        out->median_ratio[i] = summaries[i].median_ratio;
        out->warm_win_fraction[i] = summaries[i].warm_win_fraction;
      }
    }
  });
}

}  // extern "C"
