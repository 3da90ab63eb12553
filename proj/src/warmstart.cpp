#include "warmstart.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace heatflow {
namespace {

InitCurve solve_observed(std::string kind, const TemperatureField& initial,
                         const TemperatureField& truth,
                         const BenchConfig& config) {
  InitCurve curve;
  curve.init_kind = std::move(kind);
  const double min_threshold =
      config.thresholds.empty()
          ? -1.0
          : *std::min_element(config.thresholds.begin(),
                              config.thresholds.end());

  auto note_error = [&](int64_t sweep, double err) {
    curve.errors.emplace_back(sweep, err);
    for (double threshold : config.thresholds) {
      if (err <= threshold && !curve.sweeps_to_threshold.contains(threshold)) {
        curve.sweeps_to_threshold[threshold] = sweep;
      }
    }
  };
  note_error(0, per_pixel_error(initial, truth).mean_percent);

  SolverConfig solver{config.method, config.tolerance, config.max_sweeps};
  auto observer = [&](int64_t sweep, const TemperatureField& current) {
    if (sweep % config.sample_every != 0) return true;
    const double err = per_pixel_error(current, truth).mean_percent;
    note_error(sweep, err);
    // Stop once every threshold is crossed.
    return !(min_threshold >= 0.0 && err <= min_threshold);
  };
  fd_solve(initial, border_mask(initial.height(), initial.width()), solver,
           observer);
  return curve;
}

}  // namespace

std::vector<BenchResult> run_bench(const WarmStartFn& warm_start,
                                   int problem_size, const BenchConfig& config) {
  if (config.n_problems < 1) {
    fail(ErrorCode::invalid_argument, "run_bench: n_problems must be >= 1");
  }
  if (config.sample_every < 1) {
    fail(ErrorCode::invalid_argument, "run_bench: sample_every must be >= 1");
  }
  Rng rng(config.seed);
  std::vector<BenchResult> results;
  results.reserve(static_cast<size_t>(config.n_problems));
  for (int p = 0; p < config.n_problems; ++p) {
    auto problem = make_problem(sample_boundary(rng, problem_size));
    auto truth = ground_truth(problem, config.cache_dir);

    auto warm_field = warm_start(problem);
    if (!warm_field.same_shape(problem)) {
      fail(ErrorCode::dimension_mismatch,
           "run_bench: warm start field is " +
               std::to_string(warm_field.height()) + "x" +
               std::to_string(warm_field.width()) + " for a " +
               std::to_string(problem_size) + "x" +
               std::to_string(problem_size) + " problem");
    }
    BenchResult result;
    result.problem_id = p;
    result.warm = solve_observed("warm", warm_field, truth, config);
    result.constant =
        solve_observed("constant", constant_init(problem), truth, config);
    results.push_back(std::move(result));
  }
  return results;
}

std::vector<BenchResult> run_bench(const Model& model,
                                   const BenchConfig& config) {
  return run_bench(
      [&model](const TemperatureField& problem) {
        return model.predict(problem);
      },
      model.input_size(), config);
}

std::vector<ThresholdSummary> summarize(const std::vector<BenchResult>& results,
                                        const std::vector<double>& thresholds) {
  std::vector<ThresholdSummary> summaries;
  for (double threshold : thresholds) {
    ThresholdSummary summary;
    summary.threshold = threshold;
    std::vector<double> ratios;
    int wins = 0;
    for (const auto& r : results) {
      auto warm_it = r.warm.sweeps_to_threshold.find(threshold);
      auto const_it = r.constant.sweeps_to_threshold.find(threshold);
      if (warm_it == r.warm.sweeps_to_threshold.end() ||
          const_it == r.constant.sweeps_to_threshold.end()) {
        continue;
      }
      const int64_t warm = warm_it->second, constant = const_it->second;
      ratios.push_back(static_cast<double>(constant) /
                       static_cast<double>(std::max<int64_t>(warm, 1)));
      if (warm < constant) ++wins;
    }
    summary.n_compared = static_cast<int>(ratios.size());
    if (!ratios.empty()) {
      std::sort(ratios.begin(), ratios.end());
      const size_t mid = ratios.size() / 2;
      summary.median_ratio = (ratios.size() % 2 == 1)
                                 ? ratios[mid]
                                 : 0.5 * (ratios[mid - 1] + ratios[mid]);
      summary.warm_win_fraction =
          static_cast<double>(wins) / static_cast<double>(ratios.size());
    }
    summaries.push_back(summary);
  }
  return summaries;
}

void emit_curves(const std::vector<BenchResult>& results,
                 const std::vector<double>& thresholds,
                 const std::filesystem::path& csv_path,
                 const std::filesystem::path& json_path) {
  if (results.empty()) {
    fail(ErrorCode::invalid_argument, "emit_curves: no results to write");
  }
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) fail(ErrorCode::io, "cannot open for writing: " + csv_path.string());
  csv << "problem_id,init_kind,sweep,mean_percent\n";
  for (const auto& r : results) {
    for (const auto* curve : {&r.warm, &r.constant}) {
      for (const auto& [sweep, err] : curve->errors) {
        if (sweep == 0) continue;  // row count contract: one row per sweep run
        csv << r.problem_id << ',' << curve->init_kind << ',' << sweep << ','
            << format_double(err) << '\n';
      }
    }
  }
  if (!csv) fail(ErrorCode::io, "write failed: " + csv_path.string());

  nlohmann::json summary_json;
  summary_json["n_problems"] = results.size();
  auto& entries = summary_json["thresholds"] = nlohmann::json::array();
  for (const auto& s : summarize(results, thresholds)) {
    entries.push_back({{"threshold", s.threshold},
                       {"median_ratio", s.median_ratio},
                       {"warm_win_fraction", s.warm_win_fraction},
                       {"n_compared", s.n_compared}});
  }
  std::ofstream json_out(json_path, std::ios::binary);
  if (!json_out) {
    fail(ErrorCode::io, "cannot open for writing: " + json_path.string());
  }
  json_out << summary_json.dump(2) << '\n';
  if (!json_out) fail(ErrorCode::io, "write failed: " + json_path.string());
}

}  // namespace heatflow
