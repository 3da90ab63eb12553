#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fd_solver.hpp"
#include "kernel_learner.hpp"

using namespace heatflow;

TEST_CASE("normalize_stencil of the canonical kernel") {
  auto normalized = normalize_stencil(Stencil3x3::canonical());
  const double root20 = std::sqrt(20.0);
  CHECK(normalized.center() == doctest::Approx(4.0 / root20).epsilon(1e-12));
  CHECK(normalized.at(0, 1) == doctest::Approx(-1.0 / root20).epsilon(1e-12));
  CHECK(normalized.frobenius_norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normalize_stencil fixes the sign and ignores positive scale") {
  auto canonical = Stencil3x3::canonical();
  Stencil3x3 flipped;
  for (size_t i = 0; i < 9; ++i) flipped.w[i] = -0.37 * canonical.w[i];
  auto normalized = normalize_stencil(flipped);
  CHECK(normalized.center() > 0.0);
  auto reference = normalize_stencil(canonical);
  for (size_t i = 0; i < 9; ++i) {
    CHECK(normalized.w[i] == doctest::Approx(reference.w[i]).epsilon(1e-12));
  }
  Stencil3x3 scaled;
  for (size_t i = 0; i < 9; ++i) scaled.w[i] = 3.0 * canonical.w[i];
  auto a = normalize_stencil(scaled);
  for (size_t i = 0; i < 9; ++i) {
    CHECK(a.w[i] == doctest::Approx(reference.w[i]).epsilon(1e-12));
  }
}

TEST_CASE("normalize_stencil rejects the zero stencil") {
  CHECK_THROWS_AS(normalize_stencil(Stencil3x3{}), Error);
}

TEST_CASE("reported learned kernel is a scaled five-point rule") {
  // Learned values from converged 8x8 data: center -0.2181, edges ~0.0545,
  // corners ~0. Normalization must land within 0.003 of -0.25 per edge/center.
  Stencil3x3 learned{{0.0, 0.0545, 0.0001, 0.0545, -0.2181, 0.0545, 0.0,
                      0.0547, 0.0}};
  CHECK(off_center_ratio(learned) == doctest::Approx(-0.2499).epsilon(1e-3));
  auto normalized = normalize_stencil(learned);
  CHECK(normalized.center() > 0.0);
  for (auto [r, c] : {std::pair{0, 1}, {1, 0}, {1, 2}, {2, 1}}) {
    CHECK(std::abs(normalized.at(r, c) - (-0.25) * normalized.center()) <
          0.003);
  }
  // Corners are near zero after normalization.
  for (auto [r, c] : {std::pair{0, 0}, {0, 2}, {2, 0}, {2, 2}}) {
    CHECK(std::abs(normalized.at(r, c)) < 0.02);
  }
  CHECK(cosine_similarity(normalized, Stencil3x3::canonical()) > 0.99);
}

TEST_CASE("cosine similarity is scale invariant") {
  auto canonical = Stencil3x3::canonical();
  Stencil3x3 scaled;
  for (size_t i = 0; i < 9; ++i) scaled.w[i] = 0.01 * canonical.w[i];
  CHECK(cosine_similarity(canonical, scaled) == doctest::Approx(1.0));
}

TEST_CASE("canonical stencil has near-zero objective on converged data") {
  // One short unit_norm run just to pull converged fields, then check the
  // canonical kernel's summed |residual| against the solver tolerance bound.
  Rng rng(7);
  auto stencil = Stencil3x3::canonical();
  double total = 0.0;
  int64_t count = 0;
  for (int trial = 0; trial < 4; ++trial) {
    auto truth = ground_truth(make_problem(sample_boundary(rng, 8)));
    auto residual = physics_residual(truth, stencil);
    for (double v : residual.values()) {
      total += std::abs(v);
      ++count;
    }
  }
  CHECK(total <= 4.0 * kGroundTruthTolerance * static_cast<double>(count));
}

TEST_CASE("short unit_norm run stays on the unit sphere") {
  KernelLearnConfig config;
  config.steps = 25;
  config.n_samples = 2;
  config.seed = 3;
  auto result = learn_kernel(config);
  REQUIRE(result.history.size() == 25);
  for (const auto& record : result.history) {
    CHECK(record.frobenius_norm == doctest::Approx(1.0).epsilon(1e-5));
  }
  CHECK(result.stencil.frobenius_norm() == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("unconstrained objective shrinks the kernel magnitude") {
  KernelLearnConfig config;
  config.constraint = StencilConstraint::none;
  config.steps = 1200;
  config.n_samples = 2;
  config.learning_rate = 1e-2f;
  config.seed = 11;
  auto result = learn_kernel(config);
  const double start = result.history.front().frobenius_norm;
  const double end = result.history.back().frobenius_norm;
  CHECK(end < 0.5 * start);  // drift toward the zero kernel
}

TEST_CASE("fixed_center keeps the pinned weight") {
  KernelLearnConfig config;
  config.constraint = StencilConstraint::fixed_center;
  config.steps = 30;
  config.n_samples = 2;
  config.seed = 13;
  auto result = learn_kernel(config);
  // The center weight equals its (seeded) initialization.
  Rng rng(13);
  float expected = 0.0f;
  for (int i = 0; i < 9; ++i) {
    float v = static_cast<float>(rng.normal(0.0, 0.1));
    if (i == 4) expected = v;
  }
  CHECK(result.stencil.center() == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("determinism per seed") {
  KernelLearnConfig config;
  config.steps = 10;
  config.n_samples = 2;
  config.seed = 21;
  auto a = learn_kernel(config);
  auto b = learn_kernel(config);
  for (size_t i = 0; i < 9; ++i) CHECK(a.stencil.w[i] == b.stencil.w[i]);
  CHECK(a.final_objective == b.final_objective);
}

TEST_CASE("history csv layout") {
  KernelLearnConfig config;
  config.steps = 5;
  config.n_samples = 1;
  auto result = learn_kernel(config);
  auto path = std::filesystem::temp_directory_path() / "kernel_history.csv";
  write_kernel_history_csv(result.history, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "step,objective,frobenius_norm");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 5);
  std::filesystem::remove(path);
}

TEST_CASE("config validation") {
  KernelLearnConfig config;
  config.grid_size = 2;
  CHECK_THROWS_AS(learn_kernel(config), Error);
  config = {};
  config.steps = 0;
  CHECK_THROWS_AS(learn_kernel(config), Error);
}
