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

#include "phasegrid/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "phasegrid/errors.hpp"

namespace phasegrid {

std::string to_string(Study s) {
  switch (s) {
    case Study::GridIdeal:
      return "grid-ideal";
    case Study::LwIdeal:
      return "lw-ideal";
    case Study::GridDephased:
      return "grid-dephased";
    case Study::Hybrid:
      return "hybrid";
  }
  return "unknown";
}

Study parse_study(const std::string& name) {
  for (Study s : {Study::GridIdeal, Study::LwIdeal, Study::GridDephased, Study::Hybrid}) {
    if (name == to_string(s)) return s;
  }
  throw ConfigError("unknown study '" + name +
                    "' (expected grid-ideal, lw-ideal, grid-dephased or hybrid)");
}

void RunConfig::validate() const {
  if (n_trials < 1) throw ConfigError("n_trials must be at least 1");
  const bool ideal = study == Study::GridIdeal || study == Study::LwIdeal;
  if (ideal && !std::isinf(t2_true)) {
    throw ConfigError(to_string(study) + " simulates without dephasing; leave t2_true unset");
  }
  if (!ideal && !(t2_true > 0.0 && std::isfinite(t2_true))) {
    throw ConfigError(to_string(study) + " needs a finite positive t2_true");
  }
  if (study == Study::LwIdeal && n_particles < 2) {
    throw ConfigError("n_particles must be at least 2");
  }
  if (study == Study::Hybrid && (n1 < 3 || n2 < 1)) {
    throw ConfigError("hybrid needs n1 >= 3 and n2 >= 1");
  }
  if (!(t_max >= 0.0)) throw ConfigError("t_max must be non-negative");
  for (std::size_t k : snapshot_schedule) {
    if (k > n_experiments) {
      throw ConfigError("snapshot index " + std::to_string(k) + " exceeds n_experiments");
    }
  }
  if (!snapshot_schedule.empty() && (study == Study::LwIdeal || study == Study::Hybrid)) {
    throw ConfigError("grid snapshots are only recorded for grid-ideal and grid-dephased");
  }
  filter_config().validate();
}

double RunConfig::resolved_t_max() const {
  if (t_max > 0.0) return t_max;
  return study == Study::GridDephased ? 2.0 * t2_true : 1e14;
}

FilterConfig RunConfig::filter_config() const {
  FilterConfig f;
  f.prior_lo = prior_lo;
  f.prior_hi = prior_hi;
  f.w_th = w_th;
  f.e_th = e_th;
  f.n_initial = study == Study::Hybrid ? n1 : n_initial;
  f.n_experiments = n_experiments;
  f.estimator = estimator;
  f.heuristic = heuristic;
  f.multi_pass_refine = multi_pass;
  f.use_inversion_phase = inversion_phase;
  f.limits.t_max = resolved_t_max();
  f.theta_lo = theta_lo;
  f.theta_hi = theta_hi;
  return f;
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["study"] = to_string(cfg.study);
  j["prior_lo"] = cfg.prior_lo;
  j["prior_hi"] = cfg.prior_hi;
  j["t2_true"] = std::isinf(cfg.t2_true) ? nlohmann::json(nullptr) : nlohmann::json(cfg.t2_true);
  j["w_th"] = cfg.w_th;
  j["e_th"] = cfg.e_th;
  j["n_initial"] = cfg.n_initial;
  j["n_particles"] = cfg.n_particles;
  j["n1"] = cfg.n1;
  j["n2"] = cfg.n2;
  j["n_experiments"] = cfg.n_experiments;
  j["n_trials"] = cfg.n_trials;
  j["master_seed"] = cfg.master_seed;
  j["snapshot_schedule"] = cfg.snapshot_schedule;
  j["output_dir"] = cfg.output_dir.string();
  j["estimator"] = to_string(cfg.estimator);
  j["heuristic"] = to_string(cfg.heuristic);
  j["multi_pass"] = cfg.multi_pass;
  j["inversion_phase"] = cfg.inversion_phase;
  j["t_max"] = cfg.resolved_t_max();
  j["theta_lo"] = cfg.theta_lo;
  j["theta_hi"] = cfg.theta_hi;
  j["threads"] = cfg.threads;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base) {
  if (!j.is_object()) throw ConfigError("run configuration must be a JSON object");
  RunConfig c = std::move(base);
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "study") c.study = parse_study(v.get<std::string>());
      else if (key == "prior_lo") c.prior_lo = v.get<double>();
      else if (key == "prior_hi") c.prior_hi = v.get<double>();
      else if (key == "t2_true")
        c.t2_true = v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
      else if (key == "w_th") c.w_th = v.get<double>();
      else if (key == "e_th") c.e_th = v.get<double>();
      else if (key == "n_initial") c.n_initial = v.get<std::size_t>();
      else if (key == "n_particles") c.n_particles = v.get<std::size_t>();
      else if (key == "n1") c.n1 = v.get<std::size_t>();
      else if (key == "n2") c.n2 = v.get<std::size_t>();
      else if (key == "n_experiments") c.n_experiments = v.get<std::size_t>();
      else if (key == "n_trials") c.n_trials = v.get<std::size_t>();
      else if (key == "master_seed") c.master_seed = v.get<std::uint64_t>();
      else if (key == "snapshot_schedule") c.snapshot_schedule = v.get<std::vector<std::size_t>>();
      else if (key == "output_dir") c.output_dir = v.get<std::string>();
      else if (key == "estimator") c.estimator = parse_estimator(v.get<std::string>());
      else if (key == "heuristic") c.heuristic = parse_heuristic(v.get<std::string>());
      else if (key == "multi_pass") c.multi_pass = v.get<bool>();
      else if (key == "inversion_phase") c.inversion_phase = v.get<bool>();
      else if (key == "t_max") c.t_max = v.get<double>();
      else if (key == "theta_lo") c.theta_lo = v.get<double>();
      else if (key == "theta_hi") c.theta_hi = v.get<double>();
      else if (key == "threads") c.threads = v.get<std::size_t>();
      else throw ConfigError("unknown configuration key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad configuration value: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j, std::move(base));
}

GroundTruth trial_truth(const RunConfig& cfg, std::size_t trial) {
  GroundTruth t;
  t.seed = mix_seed(cfg.master_seed, trial);
  Rng rng = Rng::stream(t.seed, 2);
  t.omega = rng.uniform(cfg.prior_lo, cfg.prior_hi);
  t.t2 = cfg.t2_true;
  return t;
}

namespace {

TrialTrace run_one(const RunConfig& cfg, const FilterConfig& fc, std::size_t trial) {
  const GroundTruth truth = trial_truth(cfg, trial);
  const std::span<const std::size_t> schedule =
      trial == 0 ? std::span<const std::size_t>(cfg.snapshot_schedule)
                 : std::span<const std::size_t>();
  switch (cfg.study) {
    case Study::GridIdeal:
      return run_grid_trial(truth, LikelihoodModel::ideal(), fc, schedule);
    case Study::GridDephased:
      return run_grid_trial(truth, LikelihoodModel::dephasing_known(cfg.t2_true), fc, schedule);
    case Study::LwIdeal:
      return run_lw_trial(truth, LikelihoodModel::ideal(), cfg.n_particles, fc);
    case Study::Hybrid:
      return run_hybrid_trial(truth, fc, cfg.n1, cfg.n2);
  }
  throw std::logic_error("unhandled study");
}

}  // namespace

BatchResult run_batch(const RunConfig& cfg) {
  cfg.validate();
  const FilterConfig fc = cfg.filter_config();
  const auto start = std::chrono::steady_clock::now();

  BatchResult result;
  result.config = cfg;
  result.traces.resize(cfg.n_trials);

  std::size_t workers = cfg.threads != 0 ? cfg.threads : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, cfg.n_trials);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto work = [&] {
    for (std::size_t i = next++; i < cfg.n_trials; i = next++) {
      try {
        result.traces[i] = run_one(cfg, fc, i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = cfg.n_trials;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);

  result.summary = summarize(result.traces, cfg.study == Study::Hybrid);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

nlohmann::json summary_json(const BatchResult& result) {
  const RunSummary& s = result.summary;
  nlohmann::json config = to_json(result.config);
  // Neither key affects the numbers; dropping them keeps summaries of the
  // same run comparable byte for byte.
  config.erase("output_dir");
  config.erase("threads");

  nlohmann::json j;
  j["config"] = config;
  j["n_trials"] = s.n_trials;
  j["failure_count"] = s.failure_count;
  j["failed_trials"] = s.failed_trials;
  j["percentiles_cells"] = {{"q2.5", s.percentiles_cells.q2_5},
                            {"q50", s.percentiles_cells.q50},
                            {"q97.5", s.percentiles_cells.q97_5}};
  j["final_cell_counts"] = s.final_cell_counts;
  j["final_median_error"] = s.median_error.back();
  j["median_error"] = s.median_error;
  if (!s.median_theta_rel_error.empty()) {
    j["final_median_theta_rel_error"] = s.median_theta_rel_error.back();
    j["median_theta_rel_error"] = s.median_theta_rel_error;
  }
  return j;
}

void write_median_error_csv(std::ostream& out, std::span<const TrialTrace> traces) {
  out << "experiment_index,median_abs_error,q25_error,q75_error,median_cell_count\n";
  const auto old_precision = out.precision(17);
  for (const CurveRow& r : error_curve_table(traces)) {
    out << r.experiment << ',' << r.median_abs_error << ',' << r.q25_error << ',' << r.q75_error
        << ',' << r.median_cell_count << '\n';
  }
  out.precision(old_precision);
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw std::runtime_error("failed while writing " + path.string());
}

}  // namespace

void write_outputs(const BatchResult& result) {
  const std::filesystem::path dir = result.config.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string());

  {
    const auto path = dir / "median_error.csv";
    std::ofstream out = open_output(path);
    write_median_error_csv(out, result.traces);
    finish(out, path);
  }
  {
    const auto path = dir / "summary.json";
    std::ofstream out = open_output(path);
    out << summary_json(result).dump(2) << '\n';
    finish(out, path);
  }
  {
    const auto path = dir / "timing.json";
    std::ofstream out = open_output(path);
    nlohmann::json t;
    t["wall_seconds"] = result.wall_seconds;
    t["threads"] = result.config.threads;
    out << t.dump(2) << '\n';
    finish(out, path);
  }
  if (!result.summary.median_theta_rel_error.empty()) {
    const auto path = dir / "theta_error.csv";
    std::ofstream out = open_output(path);
    out << "experiment_index,median_theta_rel_error\n";
    out.precision(17);
    for (std::size_t k = 0; k < result.summary.median_theta_rel_error.size(); ++k) {
      out << k << ',' << result.summary.median_theta_rel_error[k] << '\n';
    }
    finish(out, path);
  }
  if (!result.traces.empty()) {
    for (const GridSnapshot& snap : result.traces.front().snapshots) {
      const auto path = dir / ("snapshot_" + std::to_string(snap.experiment) + ".csv");
      std::ofstream out = open_output(path);
      write_snapshot_csv(out, snap.experiment, snap.grid);
      finish(out, path);
    }
  }
}

TableRow table_row_from_summary(const nlohmann::json& summary, const std::string& label) {
  try {
    const auto counts = summary.at("final_cell_counts").get<std::vector<std::size_t>>();
    TableRow row;
    row.label = label;
    row.w_th = summary.at("config").at("w_th").get<double>();
    row.percentiles = cell_count_percentiles(counts);
    return row;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(label + " is not a run summary: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(label + " holds no cell counts");
  }
}

}  // namespace phasegrid
