#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fd_solver.hpp"
#include "trainer.hpp"

using namespace heatflow;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny_config() {
  TrainConfig config;
  config.input_size = 32;
  config.epochs = 2;
  config.problems_per_epoch = 8;
  config.batch_size = 4;
  config.seed = 5;
  config.eval_every = 0;
  return config;
}

std::string log_csv(const TrainLog& log) {
  auto path = fs::temp_directory_path() /
              ("trainlog_" + std::to_string(::getpid()) + ".csv");
  write_train_log_csv(log, path);
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  fs::remove(path);
  return buf.str();
}

// wall_seconds (last column) is timing, not part of the reproducible output.
std::string strip_wall_column(const std::string& csv) {
  std::stringstream out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    auto pos = line.rfind(',');
    out << line.substr(0, pos) << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("single-epoch smoke run") {
  auto config = tiny_config();
  config.epochs = 1;
  auto model = Model::build({32, 16, 512, config.seed});
  auto log = train(model, config);
  REQUIRE(log.epochs.size() == 1);
  CHECK(std::isfinite(log.epochs[0].mean_multiscale_loss));
  CHECK(log.epochs[0].mean_multiscale_loss >= 0.0);
  CHECK(log.epochs[0].lambda == std::vector<double>{1.0});
}

TEST_CASE("fixed seed reproduces the training log bit-for-bit") {
  auto config = tiny_config();
  auto model_a = Model::build({32, 16, 512, config.seed});
  auto model_b = Model::build({32, 16, 512, config.seed});
  auto log_a = train(model_a, config);
  auto log_b = train(model_b, config);
  CHECK(strip_wall_column(log_csv(log_a)) == strip_wall_column(log_csv(log_b)));
  // Trained parameters are identical too.
  auto pa = model_a.parameters();
  auto pb = model_b.parameters();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    auto da = pa[i].data();
    auto db = pb[i].data();
    for (size_t j = 0; j < da.size(); ++j) CHECK(da[j] == db[j]);
  }
}

TEST_CASE("lambda endpoints across a run") {
  // 128 input has a 2-level pyramid; with a 3-epoch run the middle epoch
  // splits the mass.
  TrainConfig config;
  config.input_size = 128;
  config.epochs = 3;
  config.problems_per_epoch = 2;
  config.batch_size = 2;
  config.seed = 3;
  config.eval_every = 0;
  auto model = Model::build({128, 16, 512, 3});
  auto log = train(model, config);
  REQUIRE(log.epochs.size() == 3);
  CHECK(log.epochs.front().lambda == std::vector<double>{0.0, 1.0});
  CHECK(log.epochs[1].lambda[0] == doctest::Approx(0.25));
  CHECK(log.epochs[1].lambda[1] == doctest::Approx(0.75));
  CHECK(log.epochs.back().lambda == std::vector<double>{1.0, 0.0});
}

TEST_CASE("progress definition") {
  CHECK(train_progress(0, 2) == 0.0);
  CHECK(train_progress(1, 2) == 1.0);
  CHECK(train_progress(0, 1) == 1.0);
  CHECK(train_progress(63, 128) == doctest::Approx(63.0 / 127.0));
}

TEST_CASE("curriculum off pins lambda on the finest level") {
  TrainConfig config;
  config.input_size = 128;
  config.epochs = 2;
  config.problems_per_epoch = 2;
  config.batch_size = 2;
  config.seed = 3;
  config.eval_every = 0;
  config.curriculum = false;
  auto model = Model::build({128, 16, 512, 3});
  auto log = train(model, config);
  for (const auto& record : log.epochs) {
    CHECK(record.lambda == std::vector<double>{1.0, 0.0});
  }
}

TEST_CASE("loss decreases over the first epochs at a fixed seed") {
  TrainConfig config;
  config.input_size = 32;
  config.epochs = 10;
  config.problems_per_epoch = 256;
  config.batch_size = 16;
  config.seed = 17;
  config.eval_every = 0;
  auto model = Model::build({32, 16, 512, config.seed});
  auto log = train(model, config);
  REQUIRE(log.epochs.size() == 10);
  CHECK(log.epochs[9].mean_multiscale_loss <
        log.epochs[0].mean_multiscale_loss);
}

TEST_CASE("training result is independent of the ground-truth cache") {
  auto cache = fs::temp_directory_path() / "heatflow_labelfree_cache";
  fs::remove_all(cache);
  fs::create_directories(cache);

  auto config = tiny_config();
  auto model_a = Model::build({32, 16, 512, config.seed});
  auto log_a = train(model_a, config);

  // Fill the cache directory with garbage; a label-free run cannot notice.
  std::ofstream(cache / "0123456789abcdef.csv") << "not,a,field\n";
  auto model_b = Model::build({32, 16, 512, config.seed});
  auto log_b = train(model_b, config);
  CHECK(strip_wall_column(log_csv(log_a)) == strip_wall_column(log_csv(log_b)));
  fs::remove_all(cache);
}

TEST_CASE("eval cadence records reports") {
  auto cache = fs::temp_directory_path() / "heatflow_trainer_eval_cache";
  fs::remove_all(cache);
  TrainConfig config = tiny_config();
  config.epochs = 4;
  config.eval_every = 2;
  config.eval_set_size = 2;
  auto model = Model::build({32, 16, 512, config.seed});
  const uint64_t eval_seed = derive_eval_seed(config.seed);
  auto log = train(model, config, [&](const Model& m) {
    return evaluate(m, config.eval_set_size, eval_seed, cache);
  });
  REQUIRE(log.epochs.size() == 4);
  CHECK_FALSE(log.epochs[0].eval.has_value());
  CHECK(log.epochs[1].eval.has_value());
  CHECK_FALSE(log.epochs[2].eval.has_value());
  CHECK(log.epochs[3].eval.has_value());
  CHECK(log.epochs[1].eval->n_pixels == 2 * 32 * 32);
  fs::remove_all(cache);
}

TEST_CASE("evaluate with a perfect predictor reports zero error") {
  auto report = evaluate_with(
      [](const TemperatureField& problem) { return ground_truth(problem); },
      16, 2, 99, {});
  CHECK(report.mean_percent == 0.0);
  CHECK(report.max_percent == 0.0);
  CHECK(report.n_pixels == 2 * 16 * 16);
}

TEST_CASE("evaluate with constant_init matches the direct computation") {
  const uint64_t seed = 123;
  auto report = evaluate_with(
      [](const TemperatureField& problem) { return constant_init(problem); },
      16, 3, seed, {});

  // Independent recomputation with the same sampling contract.
  Rng rng(seed);
  double sum = 0.0, max_err = 0.0;
  int64_t n = 0;
  for (int p = 0; p < 3; ++p) {
    auto problem = make_problem(sample_boundary(rng, 16));
    auto truth = ground_truth(problem);
    auto init = constant_init(problem);
    for (int i = 0; i < 16; ++i) {
      for (int j = 0; j < 16; ++j) {
        double err = std::abs(init(i, j) - truth(i, j));
        sum += err;
        max_err = std::max(max_err, err);
        ++n;
      }
    }
  }
  CHECK(report.mean_percent == doctest::Approx(sum / n).epsilon(1e-12));
  CHECK(report.max_percent == doctest::Approx(max_err).epsilon(1e-12));
  CHECK(report.mean_percent > 0.0);
}

TEST_CASE("evaluate is deterministic per seed") {
  auto model = Model::build({32, 16, 512, 2});
  auto a = evaluate(model, 2, 7, {});
  auto b = evaluate(model, 2, 7, {});
  CHECK(a.mean_percent == b.mean_percent);
  CHECK(a.std_percent == b.std_percent);
  CHECK(a.max_percent == b.max_percent);
}

TEST_CASE("eval seed derivation is disjoint from the training stream") {
  CHECK(derive_eval_seed(0) != 0);
  CHECK(derive_eval_seed(1) != derive_eval_seed(2));
}

TEST_CASE("train log csv layout") {
  auto config = tiny_config();
  auto model = Model::build({32, 16, 512, config.seed});
  auto log = train(model, config);
  auto csv = log_csv(log);
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "epoch,progress,lambda,multiscale_loss,fullres_loss,"
        "eval_mean_percent,eval_std_percent,eval_max_percent,wall_seconds");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == config.epochs);
  CHECK(strip_wall_column(csv) != csv);
}

TEST_CASE("config validation") {
  auto model = Model::build({32, 16, 512, 0});
  TrainConfig config = tiny_config();
  config.input_size = 64;
  CHECK_THROWS_AS(train(model, config), Error);
  config = tiny_config();
  config.epochs = 0;
  CHECK_THROWS_AS(train(model, config), Error);
}
