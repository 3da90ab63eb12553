#include <algorithm>
#include <cmath>

#include "fd_solver.hpp"
#include "trainer.hpp"

namespace heatflow {

ErrorReport evaluate_with(const Predictor& predictor, int size, int n_problems,
                          uint64_t seed, const std::filesystem::path& cache_dir,
                          std::vector<ErrorReport>* per_problem) {
  if (n_problems < 1) {
    fail(ErrorCode::invalid_argument, "evaluate: n_problems must be >= 1");
  }
  Rng rng(seed);
  double sum = 0.0, sum_sq = 0.0, max_err = 0.0;
  int64_t count = 0;
  for (int p = 0; p < n_problems; ++p) {
    auto problem = make_problem(sample_boundary(rng, size));
    auto truth = ground_truth(problem, cache_dir);
    auto predicted = predictor(problem);
    auto report = per_pixel_error(predicted, truth);
    if (per_problem) per_problem->push_back(report);
    const double n_px = static_cast<double>(report.n_pixels);
    sum += report.mean_percent * n_px;
    sum_sq += (report.std_percent * report.std_percent +
               report.mean_percent * report.mean_percent) *
              n_px;
    max_err = std::max(max_err, report.max_percent);
    count += report.n_pixels;
  }
  ErrorReport aggregate;
  aggregate.n_pixels = count;
  aggregate.mean_percent = sum / static_cast<double>(count);
  double variance = sum_sq / static_cast<double>(count) -
                    aggregate.mean_percent * aggregate.mean_percent;
  aggregate.std_percent = std::sqrt(std::max(variance, 0.0));
  aggregate.max_percent = max_err;
  return aggregate;
}

ErrorReport evaluate(const Model& model, int n_problems, uint64_t seed,
                     const std::filesystem::path& cache_dir,
                     std::vector<ErrorReport>* per_problem) {
  return evaluate_with(
      [&model](const TemperatureField& problem) {
        return model.predict(problem);
      },
      model.input_size(), n_problems, seed, cache_dir, per_problem);
}

}  // namespace heatflow
