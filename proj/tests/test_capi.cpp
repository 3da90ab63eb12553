#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>

#include "heatflow/heatflow.h"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / "heatflow_capi_tests";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(hf_version()) == "0.1.0");
  CHECK(std::string(hf_status_name(HF_OK)) == "ok");
  CHECK(std::string(hf_status_name(HF_ERR_DIMENSION_MISMATCH)) ==
        "dimension_mismatch");
}

TEST_CASE("field lifecycle and accessors") {
  hf_field* field = nullptr;
  REQUIRE(hf_field_create(4, 5, 1.5, &field) == HF_OK);
  CHECK(hf_field_height(field) == 4);
  CHECK(hf_field_width(field) == 5);
  CHECK(hf_field_data(field)[0] == 1.5);
  CHECK(hf_field_set(field, 2, 3, 9.25) == HF_OK);
  double v = 0;
  CHECK(hf_field_get(field, 2, 3, &v) == HF_OK);
  CHECK(v == 9.25);
  CHECK(hf_field_get(field, 9, 0, &v) == HF_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(hf_last_error()) > 0);
  hf_field_free(field);
}

TEST_CASE("invalid creation reports a status and message") {
  hf_field* field = nullptr;
  CHECK(hf_field_create(0, 5, 0.0, &field) == HF_ERR_INVALID_ARGUMENT);
  CHECK(std::string(hf_last_error()).find("dimensions") != std::string::npos);
}

TEST_CASE("problem generation through the C surface") {
  hf_rng* rng = nullptr;
  REQUIRE(hf_rng_create(7, &rng) == HF_OK);
  double edges[4] = {0, 0, 0, 0};
  REQUIRE(hf_boundary_sample(rng, 16, edges) == HF_OK);
  for (double e : edges) {
    CHECK(e >= 0.0);
    CHECK(e <= 100.0);
  }
  hf_field* problem = nullptr;
  REQUIRE(hf_problem_create(16, edges, &problem) == HF_OK);
  CHECK(hf_field_height(problem) == 16);
  double center = -1;
  CHECK(hf_field_get(problem, 8, 8, &center) == HF_OK);
  CHECK(center == 0.0);

  // Size precondition.
  hf_field* bad = nullptr;
  CHECK(hf_problem_create(2, edges, &bad) == HF_ERR_INVALID_ARGUMENT);

  hf_field_free(problem);
  hf_rng_free(rng);
}

TEST_CASE("solve, constant init, ground truth, physics loss") {
  double edges[4] = {100.0, 0.0, 0.0, 0.0};
  hf_field* problem = nullptr;
  REQUIRE(hf_problem_create(12, edges, &problem) == HF_OK);

  hf_field* solution = nullptr;
  hf_solve_stats stats{};
  REQUIRE(hf_fd_solve(problem, HF_METHOD_GAUSS_SEIDEL, 1e-8, 100000, nullptr,
                      &solution, &stats) == HF_OK);
  CHECK(stats.converged == 1);
  CHECK(stats.sweeps_used > 0);

  hf_field* constant = nullptr;
  REQUIRE(hf_constant_init(problem, &constant) == HF_OK);
  double v = 0;
  CHECK(hf_field_get(constant, 5, 5, &v) == HF_OK);
  CHECK(v == 25.0);

  auto cache = (temp_dir() / "gt_cache").string();
  hf_field* truth = nullptr;
  REQUIRE(hf_ground_truth(problem, cache.c_str(), &truth) == HF_OK);
  hf_field* truth2 = nullptr;
  REQUIRE(hf_ground_truth(problem, cache.c_str(), &truth2) == HF_OK);
  const double* a = hf_field_data(truth);
  const double* b = hf_field_data(truth2);
  for (int i = 0; i < 12 * 12; ++i) CHECK(a[i] == b[i]);

  hf_error_report report{};
  REQUIRE(hf_per_pixel_error(solution, truth, &report) == HF_OK);
  CHECK(report.mean_percent < 0.01);
  CHECK(report.n_pixels == 144);

  // Normalized loss of the oracle output.
  hf_field* normalized = nullptr;
  REQUIRE(hf_field_create(12, 12, 0.0, &normalized) == HF_OK);
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) {
      double t = 0;
      hf_field_get(truth, i, j, &t);
      hf_field_set(normalized, i, j, t / 100.0);
    }
  }
  double loss = -1;
  REQUIRE(hf_physics_loss(normalized, &loss) == HF_OK);
  CHECK(loss <= 1e-12);

  hf_field_free(normalized);
  hf_field_free(truth2);
  hf_field_free(truth);
  hf_field_free(constant);
  hf_field_free(solution);
  hf_field_free(problem);
}

TEST_CASE("field io round trip and parse errors") {
  double edges[4] = {10, 20, 30, 40};
  hf_field* problem = nullptr;
  REQUIRE(hf_problem_create(8, edges, &problem) == HF_OK);
  auto csv = (temp_dir() / "roundtrip.csv").string();
  REQUIRE(hf_field_write(problem, csv.c_str()) == HF_OK);
  hf_field* loaded = nullptr;
  REQUIRE(hf_field_read(csv.c_str(), &loaded) == HF_OK);
  const double* a = hf_field_data(problem);
  const double* b = hf_field_data(loaded);
  for (int i = 0; i < 64; ++i) CHECK(a[i] == b[i]);
  hf_field_free(loaded);
  hf_field_free(problem);

  hf_field* missing = nullptr;
  CHECK(hf_field_read((temp_dir() / "absent.csv").string().c_str(),
                      &missing) == HF_ERR_IO);
}

TEST_CASE("per-pixel error dimension mismatch maps to a status") {
  hf_field* a = nullptr;
  hf_field* b = nullptr;
  REQUIRE(hf_field_create(4, 4, 0.0, &a) == HF_OK);
  REQUIRE(hf_field_create(5, 4, 0.0, &b) == HF_OK);
  hf_error_report report{};
  CHECK(hf_per_pixel_error(a, b, &report) == HF_ERR_DIMENSION_MISMATCH);
  CHECK(std::string(hf_last_error()).find("4x4") != std::string::npos);
  hf_field_free(a);
  hf_field_free(b);
}

TEST_CASE("model load failure paths") {
  hf_model* model = nullptr;
  CHECK(hf_model_load((temp_dir() / "missing.lfck").string().c_str(),
                      &model) == HF_ERR_IO);
  auto bogus = temp_dir() / "bogus.lfck";
  {
    std::ofstream out(bogus, std::ios::binary);
    out << "???? not a checkpoint";
  }
  CHECK(hf_model_load(bogus.string().c_str(), &model) == HF_ERR_FORMAT);
}

TEST_CASE("train, evaluate, predict, bench through the C surface") {
  auto out_dir = temp_dir() / "train_out";
  fs::remove_all(out_dir);
  auto cache = (temp_dir() / "train_cache").string();

  hf_train_options options;
  hf_train_defaults(&options);
  options.input_size = 32;
  options.epochs = 2;
  options.problems_per_epoch = 8;
  options.batch_size = 4;
  options.seed = 5;
  options.eval_every = 2;
  options.eval_set_size = 2;
  options.verbose = 0;
  auto out_str = out_dir.string();
  options.out_dir = out_str.c_str();
  options.cache_dir = cache.c_str();

  hf_train_summary summary{};
  REQUIRE(hf_train(&options, &summary) == HF_OK);
  CHECK(fs::exists(out_dir / "checkpoint.lfck"));
  CHECK(fs::exists(out_dir / "trainlog.csv"));
  CHECK(summary.final_eval.n_pixels == 2 * 32 * 32);
  CHECK(summary.final_multiscale_loss >= 0.0);

  hf_model* model = nullptr;
  REQUIRE(hf_model_load((out_dir / "checkpoint.lfck").string().c_str(),
                        &model) == HF_OK);
  CHECK(hf_model_input_size(model) == 32);

  double edges[4] = {50, 10, 90, 30};
  hf_field* problem = nullptr;
  REQUIRE(hf_problem_create(32, edges, &problem) == HF_OK);
  hf_field* predicted = nullptr;
  REQUIRE(hf_model_predict(model, problem, &predicted) == HF_OK);
  double border = -1;
  hf_field_get(predicted, 0, 16, &border);
  CHECK(border == 50.0);

  // Mismatched problem size names both sizes.
  hf_field* small = nullptr;
  REQUIRE(hf_problem_create(16, edges, &small) == HF_OK);
  hf_field* bad = nullptr;
  CHECK(hf_model_predict(model, small, &bad) == HF_ERR_DIMENSION_MISMATCH);
  std::string message = hf_last_error();
  CHECK(message.find("32") != std::string::npos);
  CHECK(message.find("16") != std::string::npos);

  hf_error_report eval{};
  auto per_problem = (temp_dir() / "per_problem.csv").string();
  REQUIRE(hf_evaluate(model, 2, 9, cache.c_str(), per_problem.c_str(),
                      &eval) == HF_OK);
  CHECK(eval.n_pixels == 2 * 32 * 32);
  CHECK(fs::exists(per_problem));

  hf_bench_options bench;
  hf_bench_defaults(&bench);
  bench.n_problems = 1;
  bench.seed = 3;
  double thresholds[2] = {20.0, 10.0};
  bench.thresholds = thresholds;
  bench.n_thresholds = 2;
  bench.cache_dir = cache.c_str();
  auto curves = (temp_dir() / "curves.csv").string();
  auto bench_summary_path = (temp_dir() / "summary.json").string();
  hf_bench_summary bench_summary{};
  REQUIRE(hf_warmstart_bench(model, &bench, curves.c_str(),
                             bench_summary_path.c_str(),
                             &bench_summary) == HF_OK);
  CHECK(bench_summary.n_thresholds == 2);
  CHECK(fs::exists(curves));

  hf_field_free(small);
  hf_field_free(predicted);
  hf_field_free(problem);
  hf_model_free(model);
  fs::remove_all(out_dir);
}

TEST_CASE("kernel learning through the C surface") {
  hf_kernel_learn_options options;
  hf_kernel_learn_defaults(&options);
  options.steps = 10;
  options.n_samples = 2;
  options.seed = 5;
  double stencil[9];
  double objective = -1;
  REQUIRE(hf_learn_kernel(&options, nullptr, stencil, &objective) == HF_OK);
  CHECK(objective >= 0.0);
  double normalized[9];
  REQUIRE(hf_normalize_stencil(stencil, normalized) == HF_OK);
  double norm = 0;
  for (double w : normalized) norm += w * w;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-6));

  double zeros[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
  CHECK(hf_normalize_stencil(zeros, normalized) == HF_ERR_INVALID_ARGUMENT);
}

TEST_CASE("threads control") {
  hf_set_threads(1);
  CHECK(hf_threads() == 1);
  hf_set_threads(2);
  CHECK(hf_threads() == 2);
}
