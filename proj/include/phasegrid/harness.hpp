// Copyright 2026 The phasegrid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PHASEGRID_HARNESS_HPP
#define PHASEGRID_HARNESS_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "phasegrid/analysis.hpp"
#include "phasegrid/filters.hpp"

namespace phasegrid {

enum class Study { GridIdeal, LwIdeal, GridDephased, Hybrid };

std::string to_string(Study s);
Study parse_study(const std::string& name);

struct RunConfig {
  Study study = Study::GridIdeal;
  double prior_lo = 0.0;
  double prior_hi = 1.0;
  double t2_true = std::numeric_limits<double>::infinity();
  double w_th = 1e-3;
  double e_th = 1e-10;
  std::size_t n_initial = 100;
  std::size_t n_particles = 100;
  std::size_t n1 = 50;
  std::size_t n2 = 50;
  std::size_t n_experiments = 1000;
  std::size_t n_trials = 100;
  std::uint64_t master_seed = 1;
  std::vector<std::size_t> snapshot_schedule;
  std::filesystem::path output_dir = ".";
  Estimator estimator = Estimator::PosteriorMean;
  Heuristic heuristic = Heuristic::PghPair;
  bool multi_pass = false;
  bool inversion_phase = true;
  /// Upper clamp on the evolution time. Zero selects the study default:
  /// 2 * t2_true for grid-dephased and 1e14 otherwise.
  double t_max = 0.0;
  double theta_lo = 0.0;
  double theta_hi = 1.0;
  /// Worker threads; zero uses the hardware concurrency.
  std::size_t threads = 0;

  /// Throws ConfigError.
  void validate() const;
  double resolved_t_max() const;
  FilterConfig filter_config() const;
};

/// Resolved configuration as JSON. Infinite t2_true is written as null.
nlohmann::json to_json(const RunConfig& cfg);
/// Starts from `base` and overrides every key present in `j`. Unknown keys
/// and wrongly typed values throw ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Ground truth of trial i: seed mix_seed(master_seed, i) and omega drawn
/// uniformly from the prior with a stream of that seed.
GroundTruth trial_truth(const RunConfig& cfg, std::size_t trial);

struct BatchResult {
  RunConfig config;
  std::vector<TrialTrace> traces;
  RunSummary summary;
  double wall_seconds = 0.0;
};

/// Runs all trials (in parallel, results collected in trial order) and
/// aggregates them. Snapshots are recorded for trial 0 only. Trials that
/// degenerate are kept, flagged, and counted in the summary.
BatchResult run_batch(const RunConfig& cfg);

nlohmann::json summary_json(const BatchResult& result);

/// Writes median_error.csv, summary.json, timing.json, theta_error.csv for
/// hybrid runs, and snapshot_<k>.csv for each scheduled experiment.
void write_outputs(const BatchResult& result);

void write_median_error_csv(std::ostream& out, std::span<const TrialTrace> traces);

/// Rows of a percentile table rebuilt from stored summaries.
struct TableRow {
  std::string label;
  double w_th = 0.0;
  CellPercentiles percentiles;
};

TableRow table_row_from_summary(const nlohmann::json& summary, const std::string& label);

}  // namespace phasegrid

#endif  // PHASEGRID_HARNESS_HPP
