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

// Command line driver: run | snapshot | table | version.
// Exit codes: 0 success, 2 configuration or usage error, 3 runtime failure.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "phasegrid/errors.hpp"
#include "phasegrid/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr const char* kVersion = "0.1.0";

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> study;
  std::optional<double> prior_lo;
  std::optional<double> prior_hi;
  std::optional<double> w_th;
  std::optional<double> e_th;
  std::optional<double> t2;
  std::optional<double> t_max;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> experiments;
  std::optional<std::size_t> particles;
  std::optional<std::size_t> n_initial;
  std::optional<std::size_t> n1;
  std::optional<std::size_t> n2;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::size_t> snapshot_at;
  std::optional<std::string> estimator;
  std::optional<std::string> heuristic;
  std::optional<std::size_t> threads;
  bool multi_pass = false;
  bool no_inversion = false;
};

void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration; flags override its values");
  cmd->add_option("--study", o.study, "grid-ideal | lw-ideal | grid-dephased | hybrid");
  cmd->add_option("--prior-lo", o.prior_lo, "Lower end of the uniform omega prior");
  cmd->add_option("--prior-hi", o.prior_hi, "Upper end of the uniform omega prior");
  cmd->add_option("--w-th", o.w_th, "Merge threshold");
  cmd->add_option("--e-th", o.e_th, "Refinement threshold");
  cmd->add_option("--t2", o.t2, "True dephasing time T2 (dephased and hybrid studies)");
  cmd->add_option("--t-max", o.t_max, "Evolution time clamp (0 = study default)");
  cmd->add_option("--trials", o.trials, "Number of random ground truths");
  cmd->add_option("--experiments", o.experiments, "Experiments per trial");
  cmd->add_option("--particles", o.particles, "Liu-West particle count");
  cmd->add_option("--n-initial", o.n_initial, "Cells of the initial uniform grid");
  cmd->add_option("--n1", o.n1, "Hybrid: initial omega cells");
  cmd->add_option("--n2", o.n2, "Hybrid: theta particles per cell");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--snapshot-at", o.snapshot_at, "Experiment indices to snapshot (trial 0)")
      ->delimiter(',');
  cmd->add_option("--estimator", o.estimator, "mean | max-density");
  cmd->add_option("--heuristic", o.heuristic, "pgh-pair | sigma");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  cmd->add_flag("--multi-pass", o.multi_pass, "Repeat refinement until no cell is flagged");
  cmd->add_flag("--no-inversion-phase", o.no_inversion, "Use x = 0 for every experiment");
}

phasegrid::RunConfig resolve(const Overrides& o) {
  using namespace phasegrid;
  RunConfig c;
  if (o.config) c = load_run_config(*o.config, c);
  if (o.study) c.study = parse_study(*o.study);
  if (o.prior_lo) c.prior_lo = *o.prior_lo;
  if (o.prior_hi) c.prior_hi = *o.prior_hi;
  if (o.w_th) c.w_th = *o.w_th;
  if (o.e_th) c.e_th = *o.e_th;
  if (o.t2) c.t2_true = *o.t2;
  if (o.t_max) c.t_max = *o.t_max;
  if (o.trials) c.n_trials = *o.trials;
  if (o.experiments) c.n_experiments = *o.experiments;
  if (o.particles) c.n_particles = *o.particles;
  if (o.n_initial) c.n_initial = *o.n_initial;
  if (o.n1) c.n1 = *o.n1;
  if (o.n2) c.n2 = *o.n2;
  if (o.seed) c.master_seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  if (!o.snapshot_at.empty()) c.snapshot_schedule = o.snapshot_at;
  if (o.estimator) c.estimator = parse_estimator(*o.estimator);
  if (o.heuristic) c.heuristic = parse_heuristic(*o.heuristic);
  if (o.threads) c.threads = *o.threads;
  if (o.multi_pass) c.multi_pass = true;
  if (o.no_inversion) c.inversion_phase = false;
  c.validate();
  return c;
}

int cmd_run(const Overrides& o) {
  const phasegrid::RunConfig cfg = resolve(o);
  const phasegrid::BatchResult result = phasegrid::run_batch(cfg);
  phasegrid::write_outputs(result);
  const auto& s = result.summary;
  std::printf("%s: %zu trials, %zu failed, final median error %.3e, cells q2.5/q50/q97.5 = %g/%g/%g\n",
              phasegrid::to_string(cfg.study).c_str(), s.n_trials, s.failure_count,
              s.median_error.back(), s.percentiles_cells.q2_5, s.percentiles_cells.q50,
              s.percentiles_cells.q97_5);
  std::printf("wrote %s\n", cfg.output_dir.string().c_str());
  return 0;
}

int cmd_snapshot(Overrides o) {
  if (o.snapshot_at.empty()) {
    throw phasegrid::ConfigError("snapshot needs --snapshot-at");
  }
  o.trials = 1;
  return cmd_run(o);
}

int cmd_table(const std::vector<std::string>& files) {
  std::printf("summary,w_th,q2.5,q50,q97.5\n");
  for (const std::string& f : files) {
    std::ifstream in(f);
    if (!in) throw phasegrid::ConfigError("cannot open summary " + f);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw phasegrid::ConfigError(f + " is not valid JSON");
    }
    const phasegrid::TableRow row = phasegrid::table_row_from_summary(j, f);
    std::printf("%s,%g,%g,%g,%g\n", row.label.c_str(), row.w_th, row.percentiles.q2_5,
                row.percentiles.q50, row.percentiles.q97_5);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive grid Bayesian phase estimation"};
  app.require_subcommand(1);

  Overrides run_opts;
  CLI::App* run = app.add_subcommand("run", "Run a batch of trials and write results");
  add_run_flags(run, run_opts);

  Overrides snap_opts;
  CLI::App* snap = app.add_subcommand("snapshot", "Run one grid trial and write grid snapshots");
  add_run_flags(snap, snap_opts);

  std::vector<std::string> summaries;
  CLI::App* table = app.add_subcommand("table", "Cell-count percentiles from stored summaries");
  table->add_option("summaries", summaries, "summary.json files")->required();

  app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*snap) return cmd_snapshot(snap_opts);
    if (*table) return cmd_table(summaries);
    std::printf("phasegrid %s\n", kVersion);
    return 0;
  } catch (const phasegrid::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
