// heatflow command-line tool. Talks to the core exclusively through the
// shared library's C API (heatflow/heatflow.h); manifests and small JSON
// artifacts are written here.
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "heatflow/heatflow.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 1;

struct CliError {
  int exit_code;
  std::string code;
  std::string message;
};

[[noreturn]] void throw_status(hf_status status) {
  const std::string message = hf_last_error();
  int exit_code = kExitUsage;
  if (status == HF_ERR_NO_CONVERGENCE || status == HF_ERR_NAN ||
      status == HF_ERR_INTERNAL) {
    exit_code = kExitRuntime;
  }
  throw CliError{exit_code, hf_status_name(status), message};
}

void check(hf_status status) {
  if (status != HF_OK) throw_status(status);
}

std::string iso_timestamp() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

/// Every subcommand writes exactly one manifest into its --out directory;
/// exit code 0 implies the manifest exists.
void write_manifest(const fs::path& out_dir, const std::string& subcommand,
                    const json& config, const std::vector<std::string>& artifacts) {
  json manifest;
  manifest["subcommand"] = subcommand;
  manifest["config"] = config;
  manifest["timestamp"] = iso_timestamp();
  manifest["version"] = hf_version();
  manifest["artifacts"] = artifacts;
  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  if (!out) {
    throw CliError{kExitRuntime, "io",
                   "cannot write manifest in " + out_dir.string()};
  }
  out << manifest.dump(2) << '\n';
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw CliError{kExitRuntime, "io",
                   "cannot create output directory " + dir.string()};
  }
  return dir;
}

std::string default_cache_dir() {
  if (const char* env = std::getenv("HEATFLOW_CACHE_DIR")) return env;
  return ".heatflow-cache";
}

int default_threads() {
  if (const char* env = std::getenv("HEATFLOW_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return hf_threads();
}

struct FieldHandle {
  hf_field* ptr = nullptr;
  ~FieldHandle() { hf_field_free(ptr); }
};

struct ModelHandle {
  hf_model* ptr = nullptr;
  ~ModelHandle() { hf_model_free(ptr); }
};

struct RngHandle {
  hf_rng* ptr = nullptr;
  ~RngHandle() { hf_rng_free(ptr); }
};

void print_report(const hf_error_report& report) {
  std::printf("mean_percent=%.6f\n", report.mean_percent);
  std::printf("std_percent=%.6f\n", report.std_percent);
  std::printf("max_percent=%.6f\n", report.max_percent);
  std::printf("n_pixels=%lld\n", static_cast<long long>(report.n_pixels));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-free physics-informed solver for the steady-state "
               "2-D heat equation"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  app.set_config("--config", "", "Read options from an INI/TOML file");
  app.allow_config_extras(CLI::config_extras_mode::ignore_all);

  int threads = default_threads();
  std::string cache_dir = default_cache_dir();
  app.add_option("--threads", threads,
                 "Worker threads (1 = bitwise reproducible)")
      ->capture_default_str();
  app.add_option("--cache-dir", cache_dir,
                 "Ground-truth cache directory (HEATFLOW_CACHE_DIR)")
      ->capture_default_str();

  // ---- gen -------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "Generate random boundary problems");
  int gen_size = 128, gen_count = 1;
  uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--size", gen_size, "Grid side length")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen->add_option("--n", gen_count, "Number of problems")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();

  // ---- solve-fd ----------------------------------------------------------
  auto* solve = app.add_subcommand("solve-fd",
                                   "Solve a problem with finite differences");
  std::string solve_in, solve_out, solve_method = "gauss-seidel";
  double solve_tol = 1e-8;
  int64_t solve_max_sweeps = 5'000'000;
  solve->add_option("--in", solve_in, "Problem field (.csv or .pgm)")->required();
  solve->add_option("--method", solve_method, "jacobi or gauss-seidel")
      ->capture_default_str();
  solve->add_option("--tol", solve_tol, "Max nodal change per sweep (degrees)")
      ->capture_default_str();
  solve->add_option("--max-sweeps", solve_max_sweeps, "Sweep budget")
      ->capture_default_str();
  solve->add_option("--out", solve_out, "Output directory")->required();

  // ---- train ---------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train a model label-free");
  hf_train_options train_opt;
  hf_train_defaults(&train_opt);
  int train_size = train_opt.input_size, train_epochs = train_opt.epochs;
  int train_ppe = train_opt.problems_per_epoch;
  int train_batch = train_opt.batch_size;
  int train_eval_every = train_opt.eval_every;
  int train_eval_set = train_opt.eval_set_size;
  double train_lr = train_opt.learning_rate;
  uint64_t train_seed = 0;
  bool train_no_curriculum = false, train_quiet = false;
  std::string train_out;
  train->add_option("--size", train_size, "Input size (power of two, >= 32)")
      ->capture_default_str();
  train->add_option("--epochs", train_epochs, "Training epochs")
      ->capture_default_str();
  train->add_option("--problems-per-epoch", train_ppe,
                    "Fresh problems per epoch")
      ->capture_default_str();
  train->add_option("--batch-size", train_batch, "Problems per Adam step")
      ->capture_default_str();
  train->add_option("--lr", train_lr, "Adam learning rate")
      ->capture_default_str();
  train->add_option("--seed", train_seed, "Random seed")->capture_default_str();
  train->add_option("--eval-every", train_eval_every,
                    "Epochs between held-out evaluations (0 = never)")
      ->capture_default_str();
  train->add_option("--eval-set", train_eval_set, "Held-out problem count")
      ->capture_default_str();
  train->add_flag("--no-curriculum", train_no_curriculum,
                  "Pin the loss on the finest level (no coarse-to-fine)");
  train->add_flag("--quiet", train_quiet, "Suppress per-epoch progress");
  train->add_option("--out", train_out, "Output directory")->required();

  // ---- eval ----------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint against the "
                                          "finite-difference oracle");
  std::string eval_checkpoint, eval_out;
  int eval_n = 32;
  uint64_t eval_seed = 1;
  eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint (.lfck)")
      ->required();
  eval->add_option("--n", eval_n, "Held-out problem count")
      ->capture_default_str();
  eval->add_option("--seed", eval_seed, "Random seed")->capture_default_str();
  eval->add_option("--out", eval_out, "Output directory")->required();

  // ---- learn-kernel ---------------------------------------------------
  auto* learn = app.add_subcommand("learn-kernel",
                                   "Recover the physics kernel from "
                                   "converged solution data");
  hf_kernel_learn_options learn_opt;
  hf_kernel_learn_defaults(&learn_opt);
  int learn_grid = learn_opt.grid_size, learn_samples = learn_opt.n_samples;
  int learn_steps = learn_opt.steps;
  double learn_lr = learn_opt.learning_rate;
  uint64_t learn_seed = 0;
  std::string learn_constraint = "unit-norm", learn_out;
  learn->add_option("--grid-size", learn_grid, "Training field side length")
      ->capture_default_str();
  learn->add_option("--samples", learn_samples, "Fields per step")
      ->capture_default_str();
  learn->add_option("--steps", learn_steps, "Optimization steps")
      ->capture_default_str();
  learn->add_option("--lr", learn_lr, "Adam learning rate")
      ->capture_default_str();
  learn->add_option("--constraint", learn_constraint,
                    "unit-norm, fixed-center or none")
      ->capture_default_str();
  learn->add_option("--seed", learn_seed, "Random seed")->capture_default_str();
  learn->add_option("--out", learn_out, "Output directory")->required();

  // ---- bench-warmstart ---------------------------------------------------
  auto* bench = app.add_subcommand("bench-warmstart",
                                   "Compare FD convergence from a model warm "
                                   "start vs constant initialization");
  std::string bench_checkpoint, bench_out, bench_method = "jacobi";
  int bench_n = 32, bench_sample_every = 1;
  uint64_t bench_seed = 2;
  int64_t bench_max_sweeps = 2'000'000;
  double bench_tol = 1e-8;
  std::vector<double> bench_thresholds = {5.0, 1.0, 0.5, 0.1};
  bench->add_option("--checkpoint", bench_checkpoint, "Checkpoint (.lfck)")
      ->required();
  bench->add_option("--n", bench_n, "Problem count")->capture_default_str();
  bench->add_option("--thresholds", bench_thresholds,
                    "Descending error thresholds (percent)")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--method", bench_method, "jacobi or gauss-seidel")
      ->capture_default_str();
  bench->add_option("--sample-every", bench_sample_every,
                    "Record the error every k-th sweep")
      ->capture_default_str();
  bench->add_option("--tol", bench_tol, "Safety-stop tolerance")
      ->capture_default_str();
  bench->add_option("--max-sweeps", bench_max_sweeps, "Sweep budget")
      ->capture_default_str();
  bench->add_option("--seed", bench_seed, "Random seed")->capture_default_str();
  bench->add_option("--out", bench_out, "Output directory")->required();

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      throw CliError{kExitUsage, "usage", e.what()};
    }

    hf_set_threads(threads);

    auto parse_method_arg = [](const std::string& name) {
      if (name == "jacobi") return HF_METHOD_JACOBI;
      if (name == "gauss-seidel" || name == "gauss_seidel") {
        return HF_METHOD_GAUSS_SEIDEL;
      }
      throw CliError{kExitUsage, "invalid_argument",
                     "unknown method '" + name + "' (jacobi or gauss-seidel)"};
    };

    if (gen->parsed()) {
      auto out_dir = prepare_out_dir(gen_out);
      RngHandle rng;
      check(hf_rng_create(gen_seed, &rng.ptr));
      std::vector<std::string> artifacts;
      for (int i = 0; i < gen_count; ++i) {
        double edges[4];
        check(hf_boundary_sample(rng.ptr, gen_size, edges));
        FieldHandle problem;
        check(hf_problem_create(gen_size, edges, &problem.ptr));
        char name[64];
        std::snprintf(name, sizeof(name), "problem_%03d", i);
        for (const char* ext : {".csv", ".pgm"}) {
          auto path = out_dir / (std::string(name) + ext);
          check(hf_field_write(problem.ptr, path.string().c_str()));
          artifacts.push_back(path.string());
        }
      }
      json config = {{"size", gen_size}, {"seed", gen_seed}, {"n", gen_count},
                     {"threads", threads}};
      write_manifest(out_dir, "gen", config, artifacts);
      return 0;
    }

    if (solve->parsed()) {
      auto out_dir = prepare_out_dir(solve_out);
      FieldHandle problem;
      check(hf_field_read(solve_in.c_str(), &problem.ptr));
      FieldHandle solution;
      hf_solve_stats stats{};
      auto trace_path = out_dir / "trace.csv";
      check(hf_fd_solve(problem.ptr, parse_method_arg(solve_method), solve_tol,
                        solve_max_sweeps, trace_path.string().c_str(),
                        &solution.ptr, &stats));
      auto solution_csv = out_dir / "solution.csv";
      auto solution_pgm = out_dir / "solution.pgm";
      check(hf_field_write(solution.ptr, solution_csv.string().c_str()));
      check(hf_field_write(solution.ptr, solution_pgm.string().c_str()));
      double loss = 0.0;
      check(hf_physics_loss(solution.ptr, &loss));
      std::printf("converged=%d\n", stats.converged);
      std::printf("sweeps=%lld\n", static_cast<long long>(stats.sweeps_used));
      std::printf("final_residual=%.17g\n", stats.final_residual);
      std::printf("physics_loss=%.17g\n", loss);
      json config = {{"in", solve_in},
                     {"method", solve_method},
                     {"tol", solve_tol},
                     {"max_sweeps", solve_max_sweeps},
                     {"threads", threads}};
      write_manifest(out_dir, "solve-fd", config,
                     {solution_csv.string(), solution_pgm.string(),
                      trace_path.string()});
      return 0;
    }

    if (train->parsed()) {
      auto out_dir = prepare_out_dir(train_out);
      train_opt.input_size = train_size;
      train_opt.epochs = train_epochs;
      train_opt.problems_per_epoch = train_ppe;
      train_opt.batch_size = train_batch;
      train_opt.learning_rate = train_lr;
      train_opt.seed = train_seed;
      train_opt.eval_every = train_eval_every;
      train_opt.eval_set_size = train_eval_set;
      train_opt.curriculum = train_no_curriculum ? 0 : 1;
      train_opt.verbose = train_quiet ? 0 : 1;
      std::string out_str = out_dir.string();
      train_opt.out_dir = out_str.c_str();
      train_opt.cache_dir = cache_dir.c_str();
      hf_train_summary summary{};
      check(hf_train(&train_opt, &summary));
      print_report(summary.final_eval);
      std::printf("final_multiscale_loss=%.17g\n",
                  summary.final_multiscale_loss);
      json config = {{"size", train_size},
                     {"epochs", train_epochs},
                     {"problems_per_epoch", train_ppe},
                     {"batch_size", train_batch},
                     {"lr", train_lr},
                     {"seed", train_seed},
                     {"eval_every", train_eval_every},
                     {"eval_set", train_eval_set},
                     {"curriculum", !train_no_curriculum},
                     {"cache_dir", cache_dir},
                     {"threads", threads}};
      write_manifest(out_dir, "train", config,
                     {(out_dir / "checkpoint.lfck").string(),
                      (out_dir / "trainlog.csv").string()});
      return 0;
    }

    if (eval->parsed()) {
      auto out_dir = prepare_out_dir(eval_out);
      ModelHandle model;
      check(hf_model_load(eval_checkpoint.c_str(), &model.ptr));
      hf_error_report report{};
      auto per_problem = out_dir / "per_problem.csv";
      check(hf_evaluate(model.ptr, eval_n, eval_seed, cache_dir.c_str(),
                        per_problem.string().c_str(), &report));
      print_report(report);
      json config = {{"checkpoint", eval_checkpoint},
                     {"n", eval_n},
                     {"seed", eval_seed},
                     {"cache_dir", cache_dir},
                     {"threads", threads}};
      write_manifest(out_dir, "eval", config, {per_problem.string()});
      return 0;
    }

    if (learn->parsed()) {
      auto out_dir = prepare_out_dir(learn_out);
      learn_opt.grid_size = learn_grid;
      learn_opt.n_samples = learn_samples;
      learn_opt.steps = learn_steps;
      learn_opt.learning_rate = learn_lr;
      learn_opt.seed = learn_seed;
      if (learn_constraint == "unit-norm" || learn_constraint == "unit_norm") {
        learn_opt.constraint = HF_CONSTRAINT_UNIT_NORM;
      } else if (learn_constraint == "fixed-center" ||
                 learn_constraint == "fixed_center") {
        learn_opt.constraint = HF_CONSTRAINT_FIXED_CENTER;
      } else if (learn_constraint == "none") {
        learn_opt.constraint = HF_CONSTRAINT_NONE;
      } else {
        throw CliError{kExitUsage, "invalid_argument",
                       "unknown constraint '" + learn_constraint + "'"};
      }
      double stencil[9];
      double objective = 0.0;
      auto history_path = out_dir / "history.csv";
      check(hf_learn_kernel(&learn_opt, history_path.string().c_str(), stencil,
                            &objective));
      // 3x3 CSV, row-major.
      auto stencil_path = out_dir / "stencil.csv";
      {
        std::ofstream out(stencil_path, std::ios::binary);
        for (int r = 0; r < 3; ++r) {
          for (int c = 0; c < 3; ++c) {
            out << (c > 0 ? "," : "") << std::scientific << stencil[r * 3 + c];
          }
          out << '\n';
        }
      }
      double normalized[9];
      check(hf_normalize_stencil(stencil, normalized));
      json record = {{"constraint", learn_constraint},
                     {"grid_size", learn_grid},
                     {"samples", learn_samples},
                     {"steps", learn_steps},
                     {"lr", learn_lr},
                     {"seed", learn_seed},
                     {"final_objective", objective},
                     {"stencil", std::vector<double>(stencil, stencil + 9)},
                     {"normalized_stencil",
                      std::vector<double>(normalized, normalized + 9)}};
      auto record_path = out_dir / "kernel.json";
      std::ofstream(record_path, std::ios::binary) << record.dump(2) << '\n';
      std::printf("final_objective=%.17g\n", objective);
      std::printf("stencil=");
      for (int i = 0; i < 9; ++i) {
        std::printf("%s%.6g", i > 0 ? "," : "", stencil[i]);
      }
      std::printf("\n");
      json config = record;
      config.erase("final_objective");
      config.erase("stencil");
      config.erase("normalized_stencil");
      config["threads"] = threads;
      write_manifest(out_dir, "learn-kernel", config,
                     {stencil_path.string(), history_path.string(),
                      record_path.string()});
      return 0;
    }

    if (bench->parsed()) {
      auto out_dir = prepare_out_dir(bench_out);
      ModelHandle model;
      check(hf_model_load(bench_checkpoint.c_str(), &model.ptr));
      hf_bench_options opt;
      hf_bench_defaults(&opt);
      opt.n_problems = bench_n;
      opt.seed = bench_seed;
      opt.method = parse_method_arg(bench_method);
      opt.thresholds = bench_thresholds.data();
      opt.n_thresholds = static_cast<int>(bench_thresholds.size());
      opt.tolerance = bench_tol;
      opt.max_sweeps = bench_max_sweeps;
      opt.sample_every = bench_sample_every;
      opt.cache_dir = cache_dir.c_str();
      auto curves_path = out_dir / "curves.csv";
      auto summary_path = out_dir / "summary.json";
      hf_bench_summary summary{};
      check(hf_warmstart_bench(model.ptr, &opt, curves_path.string().c_str(),
                               summary_path.string().c_str(), &summary));
      for (int i = 0; i < summary.n_thresholds; ++i) {
        std::printf("threshold=%.3g median_ratio=%.3f warm_win_fraction=%.3f\n",
                    summary.thresholds[i], summary.median_ratio[i],
                    summary.warm_win_fraction[i]);
      }
      json config = {{"checkpoint", bench_checkpoint},
                     {"n", bench_n},
                     {"thresholds", bench_thresholds},
                     {"method", bench_method},
                     {"sample_every", bench_sample_every},
                     {"tol", bench_tol},
                     {"max_sweeps", bench_max_sweeps},
                     {"seed", bench_seed},
                     {"cache_dir", cache_dir},
                     {"threads", threads}};
      write_manifest(out_dir, "bench-warmstart", config,
                     {curves_path.string(), summary_path.string()});
      return 0;
    }

    throw CliError{kExitUsage, "usage", "no subcommand given"};
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: code=%s msg=\"%s\"\n", e.code.c_str(),
                 e.message.c_str());
    return e.exit_code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: code=internal msg=\"%s\"\n", e.what());
    return kExitRuntime;
  }
}
